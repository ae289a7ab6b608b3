"""Neighbor graph construction and Laplacian structure."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdda import build_graph


def _random_rows(seed, n=12, dim=4):
    return np.random.default_rng(seed).normal(size=(n, dim))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 6))
def test_laplacian_structure(seed, p):
    z = _random_rows(seed)
    graph = build_graph(z, p)
    w, lap = graph.weights, graph.laplacian
    assert np.max(np.abs(w - w.T)) == 0.0
    assert np.all(w >= 0.0)
    assert np.all(np.diag(w) == 0.0)
    # constant vector in the null space
    assert np.max(np.abs(lap @ np.ones(z.shape[0]))) < 1e-12
    # PSD via random quadratic forms
    rng = np.random.default_rng(seed + 1)
    for _ in range(5):
        f = rng.normal(size=z.shape[0])
        assert float(f @ lap @ f) >= -1e-10


def test_each_row_keeps_at_least_p_neighbors():
    z = _random_rows(3, n=15)
    graph = build_graph(z, 4)
    degrees = (graph.weights > 0).sum(axis=1)
    assert np.all(degrees >= 4)  # the union rule can only add edges


def test_complete_graph_when_p_is_maximal():
    z = _random_rows(4, n=8)
    graph = build_graph(z, 7)
    off_diagonal = ~np.eye(8, dtype=bool)
    assert np.all(graph.weights[off_diagonal] > 0.0)


def test_weights_are_shifted_cosine():
    z = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])
    graph = build_graph(z, 2)
    # cos pairs: (0,1)=0 -> 0.5, (0,2)=-1 -> 0.0, (1,2)=0 -> 0.5
    assert graph.weights[0, 1] == pytest.approx(0.5)
    assert graph.weights[1, 2] == pytest.approx(0.5)
    assert graph.weights[0, 2] == pytest.approx(0.0)


def test_permutation_equivariance():
    z = _random_rows(5, n=10)
    perm = np.random.default_rng(6).permutation(10)
    base = build_graph(z, 3).weights
    permuted = build_graph(z[perm], 3).weights
    assert np.allclose(base[np.ix_(perm, perm)], permuted, atol=0.0)


def test_neighbor_count_validation():
    z = _random_rows(7, n=5)
    with pytest.raises(ValueError):
        build_graph(z, 0)
    with pytest.raises(ValueError):
        build_graph(z, 5)
    with pytest.raises(ValueError):
        build_graph(z[0], 1)


def test_zero_norm_rows_warn_and_still_build():
    z = _random_rows(8, n=6)
    z[2] = 0.0
    with pytest.warns(UserWarning, match="zero-norm"):
        graph = build_graph(z, 2)
    # the zero row's similarity to everything is the shifted cosine of 0
    assert np.all(graph.weights[2] <= 0.5)
    assert np.max(np.abs(graph.laplacian @ np.ones(6))) < 1e-12
