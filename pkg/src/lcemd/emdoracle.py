"""Exact EMD for small instances, used as ground truth in tests.

Solves the transportation LP (out-flow and in-flow equalities, ``F >= 0``)
with the HiGHS dual simplex, so the returned flow is a basic solution.
Not meant for production distance computation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import coo_matrix

from .errors import InstanceTooLarge, ShapeMismatch
from .pairwise import TransportPlan, _check

__all__ = ["ExactSolution", "emd_exact", "transport_constraints"]

MAX_CELLS = 10**6


@dataclass(frozen=True)
class ExactSolution:
    cost: float
    flow: TransportPlan


def transport_constraints(hp: int, hq: int):
    """Equality matrix for row sums (first ``hp`` rows) and column sums of a
    row-major flattened ``hp x hq`` flow."""
    cells = np.arange(hp * hq)
    rows = np.concatenate([cells // hq, hp + cells % hq])
    cols = np.concatenate([cells, cells])
    return coo_matrix((np.ones(2 * cells.size), (rows, cols)), shape=(hp + hq, hp * hq)).tocsr()


def emd_exact(p, q, C, max_cells: int = MAX_CELLS) -> ExactSolution:
    p, q, C = _check(p, q, C)
    hp, hq = C.shape
    if hp * hq > max_cells:
        raise InstanceTooLarge(f"{hp}x{hq} exceeds the {max_cells}-cell limit")
    if abs(p.sum() - q.sum()) > 1e-9 * max(1.0, p.sum()):
        raise ShapeMismatch(f"histogram masses differ: {p.sum()} vs {q.sum()}")
    # equal-mass marginals; rescale q so the equality system is consistent
    q = q * (p.sum() / q.sum())
    res = linprog(
        C.ravel(),
        A_eq=transport_constraints(hp, hq),
        b_eq=np.concatenate([p, q]),
        bounds=(0, None),
        method="highs-ds",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10,
                 "presolve": False},
    )
    if res.status != 0:
        raise RuntimeError(f"transportation LP failed: {res.message}")
    F = np.clip(res.x.reshape(hp, hq), 0.0, None)
    src, dst = np.nonzero(F)
    cost = float(np.sum(F * C))
    return ExactSolution(cost, TransportPlan(src, dst, F[src, dst], cost))
