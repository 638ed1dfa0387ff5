import numpy as np
import pytest

from lcemd.errors import DimensionMismatch
from lcemd.grounddist import CostMatrix, cost_matrix, euclidean_distance, vocab_query_distances
from lcemd.histcore import EmbeddingVocabulary

from oracles import loop_cost_matrix


@pytest.mark.parametrize("u, v, d", [((0, 0), (3, 4), 5.0), ((1.5, -2.0), (1.5, -2.0), 0.0), ((1,), (4,), 3.0)])
def test_euclidean_distance(u, v, d):
    assert euclidean_distance(u, v) == d


def test_euclidean_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        euclidean_distance((0, 0), (1, 2, 3))


def test_cost_matrix_small():
    np.testing.assert_array_equal(np.asarray(cost_matrix([[0.0], [1.0]], [[0.0]])), [[0.0], [1.0]])


def test_cost_matrix_identical_lists_have_zero_diagonal(rng):
    P = rng.normal(size=(6, 3))
    C = np.asarray(cost_matrix(P, P))
    assert np.all(np.diag(C) == 0.0)
    np.testing.assert_allclose(C, C.T, rtol=0, atol=0)


def test_cost_matrix_matches_loop_oracle(rng):
    P, Q = rng.normal(size=(5, 3)), rng.normal(size=(4, 3))
    np.testing.assert_allclose(np.asarray(cost_matrix(P, Q)), loop_cost_matrix(P, Q), rtol=0, atol=1e-9)


def test_cost_matrix_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        cost_matrix(np.zeros((2, 2)), np.zeros((2, 3)))


def test_cost_matrix_type_validation():
    with pytest.raises(ValueError):
        CostMatrix([[1.0, -1.0]])
    C = CostMatrix([[1.0, 2.0]])
    assert C.T.shape == (2, 1) and C.rows == 1 and C.cols == 2


def test_vocab_query_distances_small():
    vocab = EmbeddingVocabulary([[0.0], [1.0], [2.0]])
    D = vocab_query_distances(vocab, [[0.0], [2.0]])
    np.testing.assert_array_equal(D, [[0, 2], [1, 1], [2, 0]])


def test_vocab_query_full_vocabulary_zero_diagonal(rng):
    vocab = EmbeddingVocabulary(rng.normal(size=(30, 5)) * 10)
    D = vocab_query_distances(vocab, vocab.coords)
    assert np.all(np.diag(D) == 0.0)


@pytest.mark.parametrize("block_size", [None, 7, 50])
def test_vocab_query_matches_direct(rng, block_size):
    vocab = EmbeddingVocabulary(rng.normal(size=(50, 8)))
    idx = rng.choice(50, size=7, replace=False)
    Q = vocab.coords[idx]
    D = vocab_query_distances(vocab, Q, block_size=block_size)
    np.testing.assert_allclose(D, loop_cost_matrix(vocab.coords, Q), rtol=0, atol=1e-6)
    assert np.all(D[idx, np.arange(7)] == 0.0)


def test_vocab_query_clamping_on_unit_data(rng):
    coords = rng.normal(size=(200, 16))
    coords /= np.linalg.norm(coords, axis=1, keepdims=True)
    vocab = EmbeddingVocabulary(coords)
    Q = np.vstack([coords[:10], coords[:10] + 1e-7])
    D = vocab_query_distances(vocab, Q)
    assert np.all(D >= 0)
    assert np.max(np.abs(D - loop_cost_matrix(coords, Q))) <= 1e-6


def test_vocab_query_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        vocab_query_distances(EmbeddingVocabulary(np.zeros((3, 2))), np.zeros((2, 3)))


def test_scale_equivariance(rng):
    P, Q = rng.normal(size=(6, 4)), rng.normal(size=(5, 4))
    for s in (0.5, 3.0, 1e3):
        np.testing.assert_allclose(np.asarray(cost_matrix(P * s, Q * s)), s * np.asarray(cost_matrix(P, Q)),
                                   rtol=1e-9)
        vocab = EmbeddingVocabulary(P * s)
        np.testing.assert_allclose(vocab_query_distances(vocab, Q * s),
                                   s * vocab_query_distances(EmbeddingVocabulary(P), Q), rtol=1e-9)
