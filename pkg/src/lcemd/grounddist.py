"""Euclidean ground distances between embedding coordinates."""
from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch
from .histcore import EmbeddingVocabulary

__all__ = [
    "CostMatrix",
    "euclidean_distance",
    "cost_matrix",
    "vocab_query_distances",
    "OVERLAP_TOL",
]

# Distances at or below this count as overlapping coordinates.
OVERLAP_TOL = 1e-9

# Expanded-product squared distances below this fraction of the operands'
# squared norms are recomputed directly, so coinciding points give exactly 0.
_REFINE_RTOL = 1e-6


class CostMatrix:
    """Dense ``h_p x h_q`` nonnegative cost matrix.

    Any nonnegative finite matrix is admissible; :func:`cost_matrix` builds the
    Euclidean one.  ``np.asarray(C)`` gives the underlying array.
    """

    def __init__(self, data):
        data = np.array(data, dtype=np.float64, order="C", copy=True)
        if data.ndim != 2 or 0 in data.shape:
            raise ValueError(f"cost matrix must be a non-empty 2-D array, got shape {data.shape}")
        if not np.all(np.isfinite(data)) or np.any(data < 0):
            raise ValueError("cost matrix entries must be finite and nonnegative")
        data.setflags(write=False)
        self.data = data

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self):
        return self.data.shape

    @property
    def T(self) -> "CostMatrix":
        return CostMatrix(self.data.T)

    def scaled(self, s: float) -> "CostMatrix":
        return CostMatrix(self.data * s)

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    def __repr__(self):
        return f"CostMatrix({self.rows}x{self.cols})"


def _as_points(a, name):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise DimensionMismatch(f"{name} must be a list of coordinate vectors")
    return a


def euclidean_distance(u, v) -> float:
    u = np.atleast_1d(np.asarray(u, dtype=np.float64))
    v = np.atleast_1d(np.asarray(v, dtype=np.float64))
    if u.shape != v.shape:
        raise DimensionMismatch(f"dimensionality {u.shape} vs {v.shape}")
    d = u - v
    return float(np.sqrt(np.dot(d, d)))


def cost_matrix(p_coords, q_coords) -> CostMatrix:
    """Euclidean distances between every row of ``p_coords`` and of ``q_coords``.

    Uses the difference form, so identical points give exactly 0.
    """
    p = _as_points(p_coords, "p_coords")
    q = _as_points(q_coords, "q_coords")
    if p.shape[1] != q.shape[1]:
        raise DimensionMismatch(f"m={p.shape[1]} vs m={q.shape[1]}")
    diff = p[:, None, :] - q[None, :, :]
    return CostMatrix(np.sqrt(np.einsum("ijk,ijk->ij", diff, diff)))


def vocab_query_distances(vocab: EmbeddingVocabulary, q_coords, block_size: int | None = None) -> np.ndarray:
    """Distance matrix ``D`` (``v x h``) between vocabulary rows and query coordinates.

    Computed with the expanded product ``|V_u|^2 - 2 V_u.Q_j + |Q_j|^2``,
    clamped at 0, one block of ``block_size`` vocabulary rows at a time.
    Entries whose squared value falls inside the cancellation band are
    recomputed from the coordinate difference.
    """
    q = _as_points(q_coords, "q_coords")
    if q.shape[1] != vocab.m:
        raise DimensionMismatch(f"vocabulary m={vocab.m}, query m={q.shape[1]}")
    V = vocab.coords
    v, h = V.shape[0], q.shape[0]
    q_sq = np.einsum("ij,ij->i", q, q)
    step = v if not block_size else max(1, int(block_size))
    D = np.empty((v, h))
    for a in range(0, v, step):
        b = min(v, a + step)
        blk = V[a:b] @ q.T
        blk *= -2.0
        blk += vocab.squared_norms[a:b, None]
        blk += q_sq[None, :]
        np.maximum(blk, 0.0, out=blk)
        scale = vocab.squared_norms[a:b, None] + q_sq[None, :]
        rows, cols = np.nonzero(blk <= _REFINE_RTOL * scale)
        if rows.size:
            diff = V[a + rows] - q[cols]
            blk[rows, cols] = np.einsum("ij,ij->i", diff, diff)
        np.sqrt(blk, out=blk)
        D[a:b] = blk
    return D
