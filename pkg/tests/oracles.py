"""Independent reference computations used by the tests.

None of these share code paths with the library beyond plain numpy.
"""
import itertools
import math

import numpy as np


def loop_cost_matrix(P, Q):
    P = np.atleast_2d(np.asarray(P, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    out = np.empty((len(P), len(Q)))
    for i, a in enumerate(P):
        for j, b in enumerate(Q):
            out[i, j] = math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))
    return out


def rowmin_rwmd(p, C):
    return sum(p[i] * min(C[i]) for i in range(len(p)))


def greedy_rows(p, q, C, k=None):
    """Per-row capped transfers in (cost, index) order, written as plain loops.

    ``k=None`` runs to exhaustion (ICT); otherwise ``k - 1`` capped rounds and
    a dump at the ``k``-th destination (ACT with ``k = j + 1``).
    """
    total = 0.0
    hq = len(q)
    for i in range(len(p)):
        order = sorted(range(hq), key=lambda j: (C[i][j], j))
        rem = p[i]
        if k is None:
            for j in order:
                r = min(rem, q[j])
                total += r * C[i][j]
                rem -= r
        else:
            kk = min(k, hq)
            for j in order[:kk - 1]:
                r = min(rem, q[j])
                total += r * C[i][j]
                rem -= r
            total += rem * C[i][order[kk - 1]]
    return total


def enumerate_emd(p, q, C):
    """Minimum transport cost over every basic feasible solution.

    The transportation polytope's vertices are the nonnegative solutions of
    ``A_B x = b`` for bases ``B`` of ``h_p + h_q - 1`` cells, with one
    redundant marginal equation dropped.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    C = np.asarray(C, dtype=float)
    hp, hq = C.shape
    cells = hp * hq
    A = np.zeros((hp + hq, cells))
    for i in range(hp):
        for j in range(hq):
            A[i, i * hq + j] = 1.0
            A[hp + j, i * hq + j] = 1.0
    A = A[:-1]
    b = np.concatenate([p, q])[:-1]
    r = hp + hq - 1
    bases = np.array(list(itertools.combinations(range(cells), r)))
    mats = A[:, bases].transpose(1, 0, 2)  # (nb, r, r)
    ok = np.abs(np.linalg.det(mats)) > 1e-9
    mats, bases = mats[ok], bases[ok]
    xs = np.linalg.solve(mats, np.broadcast_to(b, (len(mats), r))[..., None])[..., 0]
    feasible = np.all(xs >= -1e-12, axis=1)
    costs = np.einsum("nr,nr->n", xs[feasible], C.ravel()[bases[feasible]])
    return float(costs.min())


def exhaustive_topk_rows(D, k):
    """Per row, the k smallest (value, column) pairs via a full sort of tuples."""
    Z, S = [], []
    for row in np.asarray(D):
        pairs = sorted((float(x), j) for j, x in enumerate(row))[:k]
        Z.append([x for x, _ in pairs])
        S.append([j for _, j in pairs])
    return np.array(Z), np.array(S)
