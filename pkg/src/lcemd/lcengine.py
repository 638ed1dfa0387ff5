"""Linear-complexity batched relaxations of one query against a database.

Forward direction (database rows moved into the query), three phases:

1. ``D = dist(V, Q)`` once for the whole vocabulary, then per vocabulary
   row the ``k`` nearest query bins: distances ``Z``, query-bin indices
   ``S`` and their query weights ``W``.
2. ``k - 1`` rounds over the stored entries of ``X``: entry ``(u, i)``
   moves ``min(residual, W[i, l])`` at cost ``Z[i, l]``.
3. Whatever is left is charged at ``Z[i, k - 1]``.

The reverse direction (query moved into each row) reuses ``D``: rows with
the same support share one top-k selection over the support's rows of ``D``.

Work is split across documents only and every per-document sum runs in a
fixed order, so results do not depend on the number of worker threads.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .errors import EllTooLarge, IterationOutOfRange
from .grounddist import OVERLAP_TOL, vocab_query_distances
from .histcore import EmbeddingVocabulary, Histogram, HistogramDatabase
from .pairwise import Measure, parse_measure

__all__ = [
    "QueryPlan",
    "TransportState",
    "smallest_k",
    "phase1_topk",
    "initial_state",
    "phase2_iterate",
    "phase3_residual",
    "lc_act_forward",
    "lc_act_reverse",
    "lc_act_symmetric",
    "lc_distances",
    "topk_neighbors",
    "resolve_threads",
]

DIRECTIONS = ("forward", "reverse", "symmetric")

# Upper bound on float64 cells materialized per reverse-direction batch.
_REVERSE_BATCH_CELLS = 1 << 21


def resolve_threads(threads=None) -> int:
    if threads is None:
        threads = os.environ.get("EMDG_THREADS") or os.cpu_count() or 1
    threads = int(threads)
    if threads < 1:
        raise ValueError("thread count must be >= 1")
    return threads


def smallest_k(a, k: int, axis: int = -1, overwrite: bool = False):
    """The ``k`` smallest entries along ``axis``, ascending, ties to the lower index.

    Returns ``(values, indices)`` with ``axis`` of length ``k``.  With
    ``overwrite`` the selected entries of ``a`` may be replaced by ``inf``.
    """
    a = np.asarray(a, dtype=np.float64)
    axis = axis % a.ndim
    k = int(k)
    if not 1 <= k <= a.shape[axis]:
        raise ValueError(f"k={k} outside [1, {a.shape[axis]}]")
    if k > 8:
        idx = np.argsort(a, axis=axis, kind="stable")
        idx = np.take(idx, np.arange(k), axis=axis)
        return np.take_along_axis(a, idx, axis=axis), idx
    work = a
    idx_parts, val_parts = [], []
    for l in range(k):
        j = np.expand_dims(np.argmin(work, axis=axis), axis)
        idx_parts.append(j)
        val_parts.append(np.take_along_axis(a, j, axis=axis))
        if l + 1 < k:
            if work is a and not overwrite:
                work = a.copy()
            np.put_along_axis(work, j, np.inf, axis=axis)
    return np.concatenate(val_parts, axis=axis), np.concatenate(idx_parts, axis=axis)


@dataclass(frozen=True)
class QueryPlan:
    """Per vocabulary row: ``k`` nearest query-bin distances, indices, weights."""

    Z: np.ndarray
    S: np.ndarray
    W: np.ndarray
    k: int
    requested_k: int

    @property
    def clamped(self) -> bool:
        return self.k != self.requested_k


@dataclass(frozen=True)
class TransportState:
    """Residual mass of every stored database entry and per-row accumulated cost."""

    db: HistogramDatabase
    residual: np.ndarray
    cost: np.ndarray
    iteration: int = 0


def _query_coords(vocab: EmbeddingVocabulary, q: Histogram):
    return vocab.coords[q.indices]


def phase1_topk(vocab: EmbeddingVocabulary, q: Histogram, k: int, *, D=None,
                block_size=None) -> QueryPlan:
    """Top-``k`` nearest query bins for every vocabulary row.

    ``k`` larger than the query size is clamped to ``h_q``; ``plan.clamped``
    records it.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if D is None:
        D = vocab_query_distances(vocab, _query_coords(vocab, q), block_size=block_size)
    kk = min(k, q.h)
    Z, S = smallest_k(D, kk, axis=1)
    W = q.weights[S]
    return QueryPlan(Z, S, W, kk, k)


def initial_state(db: HistogramDatabase) -> TransportState:
    return TransportState(db, db.values.copy(), np.zeros(db.n), 0)


def _row_sums(contrib, offsets):
    return np.add.reduceat(contrib, offsets[:-1]) if contrib.size else np.zeros(offsets.size - 1)


def phase2_iterate(state: TransportState, plan: QueryPlan, l: int) -> TransportState:
    """Transfer round ``l`` (1-based, ``1 <= l <= k - 1``)."""
    if not 1 <= l <= plan.k - 1:
        raise IterationOutOfRange(f"iteration {l} outside [1, {plan.k - 1}]")
    cols = state.db.col_indices
    moved = np.minimum(state.residual, plan.W[cols, l - 1])
    residual = state.residual - moved
    cost = state.cost + _row_sums(moved * plan.Z[cols, l - 1], state.db.row_offsets)
    return replace(state, residual=residual, cost=cost, iteration=l)


def phase3_residual(state: TransportState, plan: QueryPlan) -> np.ndarray:
    """Charge the remaining mass at the ``k``-th distance; returns the final costs."""
    cols = state.db.col_indices
    return state.cost + _row_sums(state.residual * plan.Z[cols, plan.k - 1], state.db.row_offsets)


# chunk kernels: cols/vals/offsets describe a contiguous block of rows

def _forward_chunk(cols, vals, offsets, plan: QueryPlan, omr: bool):
    Z, W = plan.Z, plan.W
    if omr:
        z0 = Z[cols, 0]
        if plan.k < 2:
            return _row_sums(vals * z0, offsets)
        z1 = Z[cols, 1]
        overlap = z0 <= OVERLAP_TOL
        moved = np.where(overlap, np.minimum(vals, W[cols, 0]), 0.0)
        contrib = moved * z0 + (vals - moved) * np.where(overlap, z1, z0)
        return _row_sums(contrib, offsets)
    t = np.zeros(offsets.size - 1)
    residual = vals
    for l in range(plan.k - 1):
        moved = np.minimum(residual, W[cols, l])
        residual = residual - moved
        t = t + _row_sums(moved * Z[cols, l], offsets)
    return t + _row_sums(residual * Z[cols, plan.k - 1], offsets)


def _row_chunks(db: HistogramDatabase, threads: int):
    """Contiguous row ranges with roughly equal stored-entry counts."""
    if threads <= 1 or db.n < 2:
        return [(0, db.n)]
    pieces = min(db.n, threads * 4)
    targets = np.linspace(0, db.nnz, pieces + 1)[1:-1]
    cuts = np.searchsorted(db.row_offsets, targets)
    bounds = np.unique(np.concatenate([[0], cuts, [db.n]]))
    return list(zip(bounds[:-1].tolist(), bounds[1:].tolist()))


def _parallel_map(fn, items, threads):
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _forward(db, q, k, omr, D, threads):
    plan = phase1_topk(db.vocab, q, k, D=D)
    offs = db.row_offsets

    def run(rng):
        a, b = rng
        lo, hi = offs[a], offs[b]
        return _forward_chunk(db.col_indices[lo:hi], db.values[lo:hi], offs[a:b + 1] - lo, plan, omr)

    return np.concatenate(_parallel_map(run, _row_chunks(db, threads), threads))


@lru_cache(maxsize=8)
def _support_groups_cached(db: HistogramDatabase):
    key_of = {}
    group = np.empty(db.n, dtype=np.int64)
    reps = []
    offs, cols = db.row_offsets, db.col_indices
    for u in range(db.n):
        key = cols[offs[u]:offs[u + 1]].tobytes()
        g = key_of.get(key)
        if g is None:
            g = key_of[key] = len(reps)
            reps.append(u)
        group[u] = g
    group.setflags(write=False)
    return group, np.array(reps, dtype=np.int64)


def support_groups(db: HistogramDatabase):
    """Group id of every row (rows with identical supports share one) and a
    representative row per group."""
    return _support_groups_cached(db)


def _reverse_batch(db, qw, DT, k_req, omr, group, reps, gids):
    """Reverse costs for every row whose group is in ``gids``."""
    offs, cols, vals = db.row_offsets, db.col_indices, db.values
    hq = qw.size
    lens_g = db.row_lengths[reps[gids]]
    hmax = int(lens_g.max())
    kmax = min(k_req, hmax)

    # per group and query bin: distances to the support, padded with inf;
    # the support runs along the last, contiguous axis
    Dpad = np.full((gids.size, hq, hmax), np.inf)
    for b, g in enumerate(gids):
        r = reps[g]
        Dpad[b, :, :lens_g[b]] = DT[:, cols[offs[r]:offs[r + 1]]]
    zvals, zidx = smallest_k(Dpad, kmax, axis=-1, overwrite=True)  # (B, hq, kmax)
    # padding is only selected past a row's own length, where it carries no mass
    zvals[np.isinf(zvals)] = 0.0

    local = np.full(reps.size, -1, dtype=np.int64)
    local[gids] = np.arange(gids.size)
    docs = np.nonzero(local[group] >= 0)[0]
    gi = local[group[docs]]
    lens = db.row_lengths[docs]
    Xpad = np.zeros((docs.size, hmax))
    Xpad[np.arange(hmax)[None, :] < lens[:, None]] = np.concatenate([vals[offs[u]:offs[u + 1]] for u in docs])

    ku = np.minimum(k_req, lens)
    residual = np.broadcast_to(qw, (docs.size, hq)).copy()
    t = np.zeros(docs.size)
    if omr:
        z0 = zvals[gi, :, 0]
        cap = np.take_along_axis(Xpad, zidx[gi, :, 0], axis=1)
        overlap = (z0 <= OVERLAP_TOL) & (ku >= 2)[:, None]
        moved = np.where(overlap, np.minimum(residual, cap), 0.0)
        residual -= moved
        t += np.sum(moved * z0, axis=1)
        # remainder goes to the second-nearest bin only after a free overlap move
        dump = zvals[gi[:, None], np.arange(hq)[None, :], overlap.astype(np.int64)]
        t += np.sum(residual * dump, axis=1)
        return docs, t
    for l in range(kmax - 1):
        active = l < ku - 1
        cap = np.take_along_axis(Xpad, zidx[gi, :, l], axis=1)
        moved = np.minimum(residual, cap)
        moved[~active] = 0.0
        residual -= moved
        t += np.sum(moved * zvals[gi, :, l], axis=1)
    dump = zvals[gi[:, None], np.arange(hq)[None, :], (ku - 1)[:, None]]
    t += np.sum(residual * dump, axis=1)
    return docs, t


def _reverse(db, q, k_req, omr, D, threads):
    group, reps = support_groups(db)
    DT = np.ascontiguousarray(D.T)
    qw = q.weights
    hq = q.h
    lens_g = db.row_lengths[reps]
    # batches of groups in ascending representative length keep padding small
    order = np.argsort(lens_g, kind="stable")
    batches, cur = [], []
    for g in order:
        cells = int(lens_g[g]) * hq * max(1, len(cur) + 1)
        if cur and cells > _REVERSE_BATCH_CELLS:
            batches.append(np.array(cur))
            cur = []
        cur.append(g)
    if cur:
        batches.append(np.array(cur))

    t = np.empty(db.n)
    for docs, tt in _parallel_map(
            lambda gids: _reverse_batch(db, qw, DT, k_req, omr, group, reps, gids), batches, threads):
        t[docs] = tt
    return t


def _prepare(db: HistogramDatabase, q: Histogram, block_size=None):
    db.check_compatible(q)
    return vocab_query_distances(db.vocab, _query_coords(db.vocab, q), block_size=block_size)


def lc_distances(db: HistogramDatabase, q: Histogram, measure="act-1", direction="symmetric", *,
                 threads=None, block_size=None) -> np.ndarray:
    """Relaxed EMD from ``q`` to every row of ``db`` for ``rwmd``, ``omr``, ``ict`` or ``act-J``."""
    m = parse_measure(measure)
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}")
    threads = resolve_threads(threads)
    D = _prepare(db, q, block_size)
    omr = m.name == "omr"
    if m.name == "rwmd":
        k_fwd = k_rev = 1
    elif omr:
        k_fwd = k_rev = 2
    elif m.name == "ict":
        k_fwd, k_rev = q.h, int(db.row_lengths.max())
    else:
        k_fwd = k_rev = m.iters + 1
    out = None
    if direction in ("forward", "symmetric"):
        out = _forward(db, q, k_fwd, omr, D, threads)
    if direction in ("reverse", "symmetric"):
        rev = _reverse(db, q, k_rev, omr, D, threads)
        out = rev if out is None else np.maximum(out, rev)
    return out


def lc_act_forward(db, q, j_iters, *, threads=None, block_size=None):
    return lc_distances(db, q, Measure("act", int(j_iters)), "forward", threads=threads, block_size=block_size)


def lc_act_reverse(db, q, j_iters, *, threads=None, block_size=None):
    return lc_distances(db, q, Measure("act", int(j_iters)), "reverse", threads=threads, block_size=block_size)


def lc_act_symmetric(db, q, j_iters, *, threads=None, block_size=None):
    return lc_distances(db, q, Measure("act", int(j_iters)), "symmetric", threads=threads, block_size=block_size)


def topk_neighbors(distances, ell: int, exclude=None, *, largest=False) -> np.ndarray:
    """Indices of the ``ell`` smallest (or largest) entries, ties to the lower index."""
    d = np.asarray(distances, dtype=np.float64)
    available = d.size - (exclude is not None)
    if ell > available:
        raise EllTooLarge(f"ell={ell} exceeds the {available} candidates")
    keys = -d if largest else d.copy()
    if exclude is not None:
        keys[exclude] = np.inf
    if ell < keys.size // 4:
        cand = np.argpartition(keys, ell)[:ell + 1]
        kth = keys[cand].max()
        cand = np.nonzero(keys <= kth)[0]
        order = cand[np.argsort(keys[cand], kind="stable")]
    else:
        order = np.argsort(keys, kind="stable")
    return order[:ell]
