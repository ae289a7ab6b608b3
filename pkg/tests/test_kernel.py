"""Kernel specs, the variance bandwidth rule, and gram-matrix structure."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mdda import KernelSpec, default_bandwidth, gram
from mdda.exceptions import ConfigError
from mdda.kernel import kernel_rows, resolve_bandwidth

data_floats = st.floats(min_value=-50.0, max_value=50.0, allow_nan=False, allow_infinity=False)


def data_arrays(min_rows=2, max_rows=8, min_cols=1, max_cols=4):
    return arrays(
        np.float64,
        st.tuples(st.integers(min_rows, max_rows), st.integers(min_cols, max_cols)),
        elements=data_floats,
    )


def test_kernel_spec_validation():
    with pytest.raises(ConfigError):
        KernelSpec("poly")
    with pytest.raises(ConfigError):
        KernelSpec("rbf", 0.0)
    with pytest.raises(ConfigError):
        KernelSpec("rbf", -1.0)
    assert KernelSpec("linear").bandwidth is None


def test_default_bandwidth_hand_example():
    assert default_bandwidth(np.array([[0.0, 0.0], [2.0, 0.0]])) == 1.0


@settings(max_examples=25, deadline=None)
@given(data_arrays(), st.floats(min_value=0.1, max_value=10.0))
def test_default_bandwidth_scales_quadratically(x, c):
    try:
        base = default_bandwidth(x)
    except ValueError:
        return  # constant input, covered by the explicit error test
    scaled = default_bandwidth(c * x)
    assert scaled == pytest.approx(c * c * base, rel=1e-9)


def test_default_bandwidth_errors():
    with pytest.raises(ValueError, match="bandwidth"):
        default_bandwidth(np.ones((4, 3)))
    with pytest.raises(ValueError):
        default_bandwidth(np.ones((1, 3)))


def test_resolve_bandwidth():
    x = np.array([[0.0, 0.0], [2.0, 0.0]])
    resolved = resolve_bandwidth(KernelSpec("rbf", None), x)
    assert resolved.bandwidth == 1.0
    assert resolve_bandwidth(KernelSpec("rbf", 3.0), x).bandwidth == 3.0
    assert resolve_bandwidth(KernelSpec("linear"), x).bandwidth is None


def test_rbf_gram_diagonal_is_one():
    x = np.random.default_rng(0).normal(size=(6, 3))
    k = gram(x, x, KernelSpec("rbf", 2.0))
    assert np.array_equal(np.diag(k), np.ones(6))


def test_linear_gram_of_orthogonal_vectors():
    x = np.eye(3)
    k = gram(x, x, KernelSpec("linear"))
    assert np.array_equal(k, np.eye(3))


@settings(max_examples=30, deadline=None)
@given(data_arrays(), st.sampled_from(["rbf", "linear"]))
def test_gram_symmetric_psd(x, kind):
    spec = KernelSpec(kind, 1.5 if kind == "rbf" else None)
    k = gram(x, x, spec)
    assert np.max(np.abs(k - k.T)) < 1e-12
    assert np.linalg.eigvalsh(k).min() >= -1e-8


@settings(max_examples=25, deadline=None)
@given(data_arrays(), data_arrays())
def test_cross_gram_transpose_identity(x1, x2):
    if x1.shape[1] != x2.shape[1]:
        x2 = x2[:, : x1.shape[1]]
        if x2.shape[1] < x1.shape[1]:
            x1 = x1[:, : x2.shape[1]]
    spec = KernelSpec("rbf", 2.0)
    assert np.max(np.abs(gram(x1, x2, spec) - gram(x2, x1, spec).T)) < 1e-12


def test_gram_errors():
    with pytest.raises(ValueError, match="bandwidth"):
        gram(np.zeros((2, 2)), np.zeros((2, 2)), KernelSpec("rbf", None))
    with pytest.raises(ValueError, match="shapes"):
        gram(np.zeros((2, 2)), np.zeros((2, 3)), KernelSpec("linear"))


def test_kernel_rows_matches_gram_diagonal():
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=(5, 3)), rng.normal(size=(5, 3))
    for spec in (KernelSpec("rbf", 1.7), KernelSpec("linear")):
        rows = kernel_rows(a, b, spec)
        full = gram(a, b, spec)
        assert np.allclose(rows, np.diag(full), atol=1e-12)


def test_kernel_rows_requires_aligned_rows():
    with pytest.raises(ValueError, match="equally many rows"):
        kernel_rows(np.zeros((2, 2)), np.zeros((3, 2)), KernelSpec("linear"))
