"""Quadratic-time reference relaxations of EMD between two histograms.

Every ``*_directed(p, q, C)`` returns the relaxed cost of moving ``p`` into
``q`` given the ``h_p x h_q`` cost matrix ``C``: the out-flow constraints
hold exactly, the in-flow constraints are dropped (RWMD), enforced only on
zero-cost edges (OMR), or replaced by edge capacities ``F_ij <= q_j``
(ICT, and ACT for a bounded number of transfer rounds).

Ties between equal distances are broken towards the smaller destination index.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch
from .grounddist import OVERLAP_TOL

__all__ = [
    "TransportPlan",
    "Measure",
    "parse_measure",
    "sorted_destinations",
    "rwmd_directed",
    "omr_directed",
    "ict_directed",
    "act_directed",
    "directed",
    "symmetric",
]

# Residual mass at or below this is considered exhausted.
RESIDUAL_EPS = 1e-15


@dataclass(frozen=True)
class TransportPlan:
    """Sparse flow ``F``: parallel arrays of source bin, destination bin, amount."""

    sources: np.ndarray
    destinations: np.ndarray
    amounts: np.ndarray
    total_cost: float

    @property
    def entries(self) -> list[tuple[int, int, float]]:
        return list(zip(self.sources.tolist(), self.destinations.tolist(), self.amounts.tolist()))

    def dense(self, shape) -> np.ndarray:
        F = np.zeros(shape)
        np.add.at(F, (self.sources, self.destinations), self.amounts)
        return F


@dataclass(frozen=True)
class Measure:
    """A relaxation by name; ``iters`` is the ACT round count (``None`` for ICT)."""

    name: str
    iters: int | None = None

    def __str__(self):
        return f"act-{self.iters}" if self.name == "act" else self.name


_ACT_RE = re.compile(r"act-?(\d+)$")


def parse_measure(spec) -> Measure:
    """Parse ``rwmd``, ``omr``, ``ict`` or ``act-J``."""
    if isinstance(spec, Measure):
        return spec
    s = str(spec).strip().lower()
    if s in ("rwmd", "omr", "ict"):
        return Measure(s)
    match = _ACT_RE.match(s)
    if match:
        return Measure("act", int(match.group(1)))
    raise ValueError(f"unknown measure {spec!r}; expected rwmd, omr, ict or act-J")


def _weights(h):
    w = getattr(h, "weights", h)
    return np.asarray(w, dtype=np.float64).reshape(-1)


def _check(p, q, C):
    p, q = _weights(p), _weights(q)
    C = np.asarray(C, dtype=np.float64)
    if C.ndim != 2 or C.shape != (p.size, q.size):
        raise ShapeMismatch(f"cost matrix {C.shape} does not match histograms ({p.size}, {q.size})")
    return p, q, C


def sorted_destinations(C, k=None):
    """Per row of ``C``, destination indices in ascending cost order.

    Stable sort, so equal costs keep ascending destination order.  Returns
    the first ``k`` columns when ``k`` is given.
    """
    order = np.argsort(C, axis=1, kind="stable")
    return order if k is None else order[:, :k]


def rwmd_directed(p, q, C) -> float:
    p, q, C = _check(p, q, C)
    return float(np.dot(p, C.min(axis=1)))


def omr_directed(p, q, C) -> float:
    p, q, C = _check(p, q, C)
    s = sorted_destinations(C, 2)
    t = 0.0
    for i in range(p.size):
        nearest = C[i, s[i, 0]]
        if nearest <= OVERLAP_TOL and s.shape[1] > 1:
            rest = p[i] - min(p[i], q[s[i, 0]])
            t += nearest * (p[i] - rest) + rest * C[i, s[i, 1]]
        else:
            t += p[i] * nearest
    return t


def ict_directed(p, q, C) -> tuple[float, TransportPlan]:
    """Optimal cost and flow under out-flow and ``F_ij <= q_j`` constraints."""
    p, q, C = _check(p, q, C)
    s = sorted_destinations(C)
    src, dst, amt = [], [], []
    t = 0.0
    for i in range(p.size):
        residual = p[i]
        for j in s[i]:
            if residual <= RESIDUAL_EPS:
                break
            r = min(residual, q[j])
            if r > 0:
                src.append(i)
                dst.append(j)
                amt.append(r)
                t += r * C[i, j]
            residual -= r
        else:
            # q sums to less than p_i; only reachable with unnormalized input
            if residual > RESIDUAL_EPS:
                j = s[i, -1]
                src.append(i)
                dst.append(j)
                amt.append(residual)
                t += residual * C[i, j]
    plan = TransportPlan(np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64),
                         np.array(amt), t)
    return t, plan


def act_directed(p, q, C, j_iters: int) -> float:
    """``j_iters`` capped transfer rounds, then the residual at the next distance.

    With ``k = j_iters + 1`` nearest destinations per row.  When ``k`` exceeds
    ``h_q`` it is clamped, so the residual goes to the farthest destination.
    """
    if j_iters < 0:
        raise ValueError("j_iters must be >= 0")
    if j_iters == 0:
        return rwmd_directed(p, q, C)
    p, q, C = _check(p, q, C)
    k = min(j_iters + 1, q.size)
    s = sorted_destinations(C, k)
    t = 0.0
    for i in range(p.size):
        residual = p[i]
        for l in range(k - 1):
            j = s[i, l]
            r = min(residual, q[j])
            residual -= r
            t += r * C[i, j]
        if residual != 0:
            t += residual * C[i, s[i, k - 1]]
    return t


def directed(measure, p, q, C) -> float:
    m = parse_measure(measure)
    if m.name == "rwmd":
        return rwmd_directed(p, q, C)
    if m.name == "omr":
        return omr_directed(p, q, C)
    if m.name == "ict":
        return ict_directed(p, q, C)[0]
    return act_directed(p, q, C, m.iters)


def symmetric(measure, p, q, C) -> float:
    """Maximum of the two directed bounds."""
    C = np.asarray(C, dtype=np.float64)
    return max(directed(measure, p, q, C), directed(measure, q, p, C.T))
