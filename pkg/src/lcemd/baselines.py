"""Cheap baselines: bag-of-words cosine similarity and word centroid distance."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, VocabularyMismatch
from .histcore import EmbeddingVocabulary, Histogram, HistogramDatabase

__all__ = ["CentroidIndex", "bow_cosine", "build_centroids", "query_centroid", "wcd"]


def bow_cosine(db: HistogramDatabase, q: Histogram) -> np.ndarray:
    """Cosine similarity between ``q`` and every row, touching only stored entries.

    Larger means closer.
    """
    db.check_compatible(q)
    qn = np.linalg.norm(q.weights)
    dense_q = np.zeros(db.vocab.v)
    if qn > 0:
        dense_q[q.indices] = q.weights / qn
    starts = db.row_offsets[:-1]
    dots = np.add.reduceat(db.values * dense_q[db.col_indices], starts)
    norms = np.sqrt(np.add.reduceat(db.values * db.values, starts))
    out = np.zeros(db.n)
    np.divide(dots, norms, out=out, where=norms > 0)
    return out


@dataclass(frozen=True)
class CentroidIndex:
    centroids: np.ndarray
    vocab_ref: str

    @property
    def m(self) -> int:
        return self.centroids.shape[1]


def build_centroids(db: HistogramDatabase, vocab: EmbeddingVocabulary | None = None) -> CentroidIndex:
    """Weighted average embedding of every row."""
    vocab = db.vocab if vocab is None else vocab
    if vocab.fingerprint != db.vocab_ref:
        raise VocabularyMismatch("database was built over a different vocabulary")
    starts = db.row_offsets[:-1]
    sums = np.add.reduceat(db.values[:, None] * vocab.coords[db.col_indices], starts, axis=0)
    mass = np.add.reduceat(db.values, starts)
    return CentroidIndex(sums / mass[:, None], vocab.fingerprint)


def query_centroid(q: Histogram, vocab: EmbeddingVocabulary) -> np.ndarray:
    return q.weights @ q.coords(vocab) / q.weights.sum()


def wcd(index: CentroidIndex, q_centroid) -> np.ndarray:
    """Euclidean distance from ``q_centroid`` to every row centroid."""
    c = np.atleast_1d(np.asarray(q_centroid, dtype=np.float64))
    if c.shape != (index.m,):
        raise DimensionMismatch(f"centroid of shape {c.shape}, index has m={index.m}")
    diff = index.centroids - c
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))
