"""Histograms, embedding vocabularies and row-compressed histogram databases.

A histogram is a sparse weight vector over the rows of an embedding
vocabulary.  Support membership is decided by the stored bins, not by the
weights: a stored bin with weight 0 is still part of the support.
"""
from __future__ import annotations

import hashlib
import io
import json
import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    AllZeroMass,
    ChecksumFailure,
    IndexOutOfRange,
    LabelCountMismatch,
    VersionMismatch,
    VocabularyMismatch,
)

__all__ = [
    "EmbeddingVocabulary",
    "Histogram",
    "HistogramDatabase",
    "DatasetStats",
    "normalize_histogram",
    "build_database",
    "save_database",
    "load_database",
    "export_jsonl",
]

NORMALIZATION_TOL = 1e-9


def _readonly(a):
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class EmbeddingVocabulary:
    """``v x m`` matrix of bin coordinates with optional token labels."""

    coords: np.ndarray
    tokens: tuple[str, ...] | None = None
    squared_norms: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        coords = np.array(self.coords, dtype=np.float64, order="C", copy=True)
        if coords.ndim == 1:
            coords = coords[:, None]
        if coords.ndim != 2 or coords.shape[0] < 1 or coords.shape[1] < 1:
            raise ValueError(f"coords must be a non-empty v x m matrix, got shape {coords.shape}")
        if not np.all(np.isfinite(coords)):
            raise ValueError("vocabulary coordinates must be finite")
        tokens = self.tokens
        if tokens is not None:
            tokens = tuple(str(t) for t in tokens)
            if len(tokens) != coords.shape[0]:
                raise ValueError(f"{len(tokens)} tokens for {coords.shape[0]} coordinate rows")
        object.__setattr__(self, "coords", _readonly(coords))
        object.__setattr__(self, "tokens", tokens)
        sq = np.einsum("ij,ij->i", coords, coords)
        object.__setattr__(self, "squared_norms", _readonly(sq))

    @property
    def v(self) -> int:
        return self.coords.shape[0]

    @property
    def m(self) -> int:
        return self.coords.shape[1]

    @cached_property
    def fingerprint(self) -> str:
        h = hashlib.blake2b(digest_size=16)
        h.update(struct.pack("<qq", *self.coords.shape))
        h.update(self.coords.tobytes())
        return h.hexdigest()

    @cached_property
    def token_index(self) -> dict[str, int]:
        if self.tokens is None:
            return {}
        index = {}
        for i, tok in enumerate(self.tokens):
            index.setdefault(tok, i)
        return index

    def __eq__(self, other):
        if not isinstance(other, EmbeddingVocabulary):
            return NotImplemented
        return (self.coords.shape == other.coords.shape
                and np.array_equal(self.coords, other.coords)
                and self.tokens == other.tokens)

    __hash__ = object.__hash__


@dataclass(frozen=True, eq=False)
class Histogram:
    """Sparse histogram: strictly increasing vocabulary indices and weights."""

    indices: np.ndarray
    weights: np.ndarray
    vocab_ref: str | None = None

    def __post_init__(self):
        idx = np.array(self.indices, dtype=np.int64, copy=True).reshape(-1)
        w = np.array(self.weights, dtype=np.float64, copy=True).reshape(-1)
        if idx.shape != w.shape:
            raise ValueError("indices and weights must have the same length")
        if idx.size == 0:
            raise ValueError("a histogram needs at least one bin")
        if np.any(idx < 0):
            raise IndexOutOfRange("negative vocabulary index")
        if np.any(np.diff(idx) <= 0):
            raise ValueError("indices must be strictly increasing")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and nonnegative")
        object.__setattr__(self, "indices", _readonly(idx))
        object.__setattr__(self, "weights", _readonly(w))

    @classmethod
    def from_pairs(cls, pairs, vocab_ref=None):
        pairs = sorted(pairs)
        return cls([i for i, _ in pairs], [w for _, w in pairs], vocab_ref)

    @property
    def h(self) -> int:
        return self.indices.size

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    @property
    def bins(self) -> list[tuple[int, float]]:
        return list(zip(self.indices.tolist(), self.weights.tolist()))

    def is_normalized(self, tol=NORMALIZATION_TOL) -> bool:
        return abs(self.total - 1.0) <= tol

    def coords(self, vocab: EmbeddingVocabulary) -> np.ndarray:
        if self.indices[-1] >= vocab.v:
            raise IndexOutOfRange(f"index {self.indices[-1]} outside vocabulary of size {vocab.v}")
        return vocab.coords[self.indices]

    def __eq__(self, other):
        if not isinstance(other, Histogram):
            return NotImplemented
        return (np.array_equal(self.indices, other.indices)
                and np.array_equal(self.weights, other.weights))

    __hash__ = object.__hash__

    def __repr__(self):
        return f"Histogram(h={self.h}, bins={self.bins[:6]}{'...' if self.h > 6 else ''})"


def normalize_histogram(raw: Iterable[tuple[int, float]], v: int | None = None,
                        vocab_ref: str | None = None) -> Histogram:
    """Merge duplicate indices, sort by index and scale weights to sum to 1.

    Zero-weight bins are kept.  Raises :class:`AllZeroMass` when the total
    weight is zero and :class:`IndexOutOfRange` for indices outside ``[0, v)``.
    """
    pairs = list(raw)
    if not pairs:
        raise AllZeroMass("empty histogram")
    idx = np.array([int(i) for i, _ in pairs], dtype=np.int64)
    w = np.array([float(x) for _, x in pairs], dtype=np.float64)
    if np.any(idx < 0) or (v is not None and np.any(idx >= v)):
        raise IndexOutOfRange(f"index outside [0, {v})")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and nonnegative")
    uniq, inverse = np.unique(idx, return_inverse=True)
    merged = np.zeros(uniq.size)
    np.add.at(merged, inverse, w)
    total = merged.sum()
    if total <= 0:
        raise AllZeroMass("every weight is zero")
    if abs(total - 1.0) > 1e-15:
        merged = merged / total
    return Histogram(uniq, merged, vocab_ref)


@dataclass(frozen=True)
class DatasetStats:
    n: int
    avg_h: float
    v_used: int


@dataclass(frozen=True, eq=False)
class HistogramDatabase:
    """``n x v`` weight matrix in row-compressed layout, with labels.

    ``vocab`` is the shared vocabulary; ``vocab_ref`` is its fingerprint.
    """

    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray
    labels: np.ndarray
    vocab: EmbeddingVocabulary

    def __post_init__(self):
        offs = np.array(self.row_offsets, dtype=np.int64, copy=True)
        cols = np.array(self.col_indices, dtype=np.int64, copy=True)
        vals = np.array(self.values, dtype=np.float64, copy=True)
        labels = np.array(self.labels, copy=True)
        if offs.ndim != 1 or offs.size < 2 or offs[0] != 0 or np.any(np.diff(offs) < 0):
            raise ValueError("row_offsets must start at 0, be nondecreasing and describe n >= 1 rows")
        if offs[-1] != cols.size or cols.size != vals.size:
            raise ValueError("row_offsets, col_indices and values disagree on nnz")
        n = offs.size - 1
        if labels.shape[0] != n:
            raise LabelCountMismatch(f"{labels.shape[0]} labels for {n} rows")
        if cols.size and (cols.min() < 0 or cols.max() >= self.vocab.v):
            raise VocabularyMismatch("column index outside the vocabulary")
        if not np.all(np.isfinite(vals)) or np.any(vals < 0):
            raise ValueError("weights must be finite and nonnegative")
        step = np.diff(cols)
        step[offs[1:-1][offs[1:-1] > 0] - 1] = 1  # row boundaries
        if np.any(step <= 0) or np.any(np.diff(offs) == 0):
            raise ValueError("each row needs at least one bin with strictly increasing indices")
        for name, arr in (("row_offsets", offs), ("col_indices", cols), ("values", vals), ("labels", labels)):
            object.__setattr__(self, name, _readonly(arr))

    @property
    def n(self) -> int:
        return self.row_offsets.size - 1

    @property
    def nnz(self) -> int:
        return self.col_indices.size

    @property
    def vocab_ref(self) -> str:
        return self.vocab.fingerprint

    @cached_property
    def row_lengths(self) -> np.ndarray:
        return _readonly(np.diff(self.row_offsets))

    @cached_property
    def row_ids(self) -> np.ndarray:
        """Row index of every stored entry."""
        return _readonly(np.repeat(np.arange(self.n), self.row_lengths))

    def row(self, u: int) -> Histogram:
        a, b = self.row_offsets[u], self.row_offsets[u + 1]
        return Histogram(self.col_indices[a:b], self.values[a:b], self.vocab_ref)

    def __iter__(self):
        return (self.row(u) for u in range(self.n))

    def __len__(self):
        return self.n

    def stats(self) -> DatasetStats:
        return DatasetStats(n=self.n, avg_h=self.nnz / self.n,
                            v_used=int(np.unique(self.col_indices).size))

    def take(self, rows: Sequence[int]) -> "HistogramDatabase":
        """New database holding ``rows`` in the given order."""
        rows = np.asarray(rows, dtype=np.int64)
        return build_database([self.row(u) for u in rows], self.labels[rows], self.vocab)

    def head(self, n: int) -> "HistogramDatabase":
        end = self.row_offsets[n]
        return HistogramDatabase(self.row_offsets[:n + 1], self.col_indices[:end],
                                 self.values[:end], self.labels[:n], self.vocab)

    def check_compatible(self, q: Histogram):
        if q.vocab_ref is not None and q.vocab_ref != self.vocab_ref:
            raise VocabularyMismatch("query histogram belongs to a different vocabulary")
        if q.indices[-1] >= self.vocab.v:
            raise VocabularyMismatch(f"query index {q.indices[-1]} outside vocabulary of size {self.vocab.v}")

    def __eq__(self, other):
        if not isinstance(other, HistogramDatabase):
            return NotImplemented
        return (np.array_equal(self.row_offsets, other.row_offsets)
                and np.array_equal(self.col_indices, other.col_indices)
                and np.array_equal(self.values, other.values)
                and self.labels.dtype.kind == other.labels.dtype.kind
                and np.array_equal(self.labels, other.labels)
                and self.vocab == other.vocab)

    __hash__ = object.__hash__


def build_database(histograms: Sequence[Histogram], labels, vocab: EmbeddingVocabulary) -> HistogramDatabase:
    """Pack histograms, in input order, into a row-compressed database."""
    histograms = list(histograms)
    if not histograms:
        raise ValueError("cannot build a database from an empty list")
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.shape[0] != len(histograms):
        raise LabelCountMismatch(f"{labels.shape[0] if labels.ndim else 0} labels for {len(histograms)} histograms")
    ref = vocab.fingerprint
    for u, hist in enumerate(histograms):
        if hist.vocab_ref is not None and hist.vocab_ref != ref:
            raise VocabularyMismatch(f"histogram {u} references another vocabulary")
        if hist.indices[-1] >= vocab.v:
            raise VocabularyMismatch(f"histogram {u} has index {hist.indices[-1]} >= v={vocab.v}")
    lengths = np.array([hist.h for hist in histograms], dtype=np.int64)
    offsets = np.zeros(len(histograms) + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    cols = np.concatenate([hist.indices for hist in histograms])
    vals = np.concatenate([hist.weights for hist in histograms])
    return HistogramDatabase(offsets, cols, vals, labels, vocab)


# Binary container
#
#   b"EMDG" | version, n, v, m, nnz (<i8 each)
#   row_offsets <i8[n+1] | col_indices <i8[nnz] | values <f8[nnz]
#   label kind <i8 (0: int64, 1: string table) | labels
#   coords <f8[v*m] | has_tokens <i8 | token table
#   checksum: first 8 bytes of blake2b over everything above
#
# A string table is a sequence of (<i8 byte length, utf-8 bytes).

MAGIC = b"EMDG"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4s5q")
_I8 = struct.Struct("<q")


def _checksum(payload: bytes) -> bytes:
    return hashlib.blake2b(payload, digest_size=8).digest()


def _write_strings(buf, items):
    for s in items:
        b = s.encode("utf-8")
        buf.write(_I8.pack(len(b)))
        buf.write(b)


def _read_strings(view, pos, count):
    out = []
    for _ in range(count):
        (length,) = _I8.unpack_from(view, pos)
        pos += 8
        out.append(bytes(view[pos:pos + length]).decode("utf-8"))
        pos += length
    return out, pos


def save_database(db: HistogramDatabase, path) -> None:
    buf = io.BytesIO()
    vocab = db.vocab
    buf.write(_HEADER.pack(MAGIC, FORMAT_VERSION, db.n, vocab.v, vocab.m, db.nnz))
    buf.write(db.row_offsets.astype("<i8").tobytes())
    buf.write(db.col_indices.astype("<i8").tobytes())
    buf.write(db.values.astype("<f8").tobytes())
    if db.labels.dtype.kind in "iub":
        buf.write(_I8.pack(0))
        buf.write(db.labels.astype("<i8").tobytes())
    else:
        buf.write(_I8.pack(1))
        _write_strings(buf, [str(x) for x in db.labels])
    buf.write(vocab.coords.astype("<f8").tobytes())
    if vocab.tokens is None:
        buf.write(_I8.pack(0))
    else:
        buf.write(_I8.pack(1))
        _write_strings(buf, vocab.tokens)
    payload = buf.getvalue()
    Path(path).write_bytes(payload + _checksum(payload))


def load_database(path) -> HistogramDatabase:
    data = Path(path).read_bytes()
    if len(data) >= 4 and data[:4] != MAGIC:
        raise VersionMismatch(f"{path}: not an EMDG container (magic {data[:4]!r})")
    if len(data) < _HEADER.size + 8:
        raise ChecksumFailure(f"{path}: file too short")
    payload, stored = data[:-8], data[-8:]
    _, version, n, v, m, nnz = _HEADER.unpack_from(payload, 0)
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"{path}: format version {version}, expected {FORMAT_VERSION}")
    if _checksum(payload) != stored:
        raise ChecksumFailure(f"{path}: checksum mismatch (truncated or corrupted file)")

    pos = _HEADER.size

    def take(dtype, count):
        nonlocal pos
        arr = np.frombuffer(payload, dtype=dtype, count=count, offset=pos)
        pos += arr.nbytes
        return arr.astype(dtype.lstrip("<"))

    offsets = take("<i8", n + 1)
    cols = take("<i8", nnz)
    vals = take("<f8", nnz)
    (kind,) = _I8.unpack_from(payload, pos)
    pos += 8
    if kind == 0:
        labels = take("<i8", n)
    else:
        names, pos = _read_strings(payload, pos, n)
        labels = np.array(names)
    coords = take("<f8", v * m).reshape(v, m)
    (has_tokens,) = _I8.unpack_from(payload, pos)
    pos += 8
    tokens = None
    if has_tokens:
        tokens, pos = _read_strings(payload, pos, v)
    return HistogramDatabase(offsets, cols, vals, labels, EmbeddingVocabulary(coords, tokens))


def export_jsonl(db: HistogramDatabase, path) -> None:
    """Debug export: one JSON object per histogram."""
    vocab = db.vocab
    with open(path, "w", encoding="utf-8") as fh:
        for u in range(db.n):
            hist = db.row(u)
            label = db.labels[u]
            rec = {
                "row": u,
                "label": label.item() if hasattr(label, "item") else label,
                "indices": hist.indices.tolist(),
                "weights": hist.weights.tolist(),
            }
            if vocab.tokens is not None:
                rec["tokens"] = [vocab.tokens[i] for i in hist.indices]
            fh.write(json.dumps(rec) + "\n")
