import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lcemd.emdoracle import emd_exact, transport_constraints
from lcemd.errors import InstanceTooLarge, ShapeMismatch
from lcemd.grounddist import cost_matrix

from oracles import enumerate_emd


def test_identity_is_free():
    C = np.asarray(cost_matrix(np.eye(3), np.eye(3)))
    p = np.array([0.2, 0.3, 0.5])
    assert emd_exact(p, p, C).cost == pytest.approx(0.0, abs=1e-12)


def test_forced_transport():
    assert emd_exact([1.0], [1.0], [[5.0]]).cost == 5.0


def test_overlap_example_matches_enumeration():
    C = np.array([[0.0, 1.0], [1.0, 0.0]])
    p, q = [0.75, 0.25], [0.25, 0.75]
    assert enumerate_emd(p, q, C) == pytest.approx(0.5, abs=1e-12)
    assert emd_exact(p, q, C).cost == pytest.approx(0.5, abs=1e-12)


def test_errors():
    with pytest.raises(ShapeMismatch):
        emd_exact([1.0], [0.5, 0.5], np.zeros((1, 3)))
    with pytest.raises(ShapeMismatch):
        emd_exact([1.0], [2.0], [[1.0]])
    with pytest.raises(InstanceTooLarge):
        emd_exact(np.ones(20) / 20, np.ones(20) / 20, np.ones((20, 20)), max_cells=100)


def test_constraint_matrix():
    A = transport_constraints(2, 3).toarray()
    assert A.shape == (5, 6)
    np.testing.assert_array_equal(A.sum(axis=0), 2)
    np.testing.assert_array_equal(A[:2].sum(axis=1), 3)


def random_pair(seed, hmax=12):
    r = np.random.default_rng(seed)
    m = int(r.integers(1, 5))
    hp, hq = r.integers(1, hmax + 1, size=2)
    p, q = r.random(hp) + 0.01, r.random(hq) + 0.01
    C = np.asarray(cost_matrix(r.normal(size=(hp, m)), r.normal(size=(hq, m))))
    return p / p.sum(), q / q.sum(), C


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_flow_feasibility(seed):
    p, q, C = random_pair(seed)
    sol = emd_exact(p, q, C)
    F = sol.flow.dense(C.shape)
    np.testing.assert_allclose(F.sum(axis=1), p, atol=1e-9)
    np.testing.assert_allclose(F.sum(axis=0), q, atol=1e-9)
    assert sol.cost == pytest.approx(float(np.sum(F * C)), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_symmetric_on_shared_support(seed):
    r = np.random.default_rng(seed)
    h = int(r.integers(1, 10))
    C = np.asarray(cost_matrix(*(2 * [r.normal(size=(h, 2))])))
    p, q = r.random(h) + 0.01, r.random(h) + 0.01
    p, q = p / p.sum(), q / q.sum()
    assert emd_exact(p, q, C).cost == pytest.approx(emd_exact(q, p, C.T).cost, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_single_source_bin(seed):
    p, q, C = random_pair(seed)
    C = C[:1]
    assert emd_exact([1.0], q, C).cost == pytest.approx(float(q @ C[0]), abs=1e-12)
