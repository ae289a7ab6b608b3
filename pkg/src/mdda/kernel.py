"""Kernel evaluations shared by the classifier and the divergence estimators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError

KERNEL_KINDS = ("rbf", "linear")


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus its RBF variance; bandwidth None means derive from data."""

    kind: str = "rbf"
    bandwidth: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in KERNEL_KINDS:
            raise ConfigError(f"unknown kernel kind {self.kind!r}, expected one of {KERNEL_KINDS}")
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise ConfigError(f"bandwidth must be positive, got {self.bandwidth}")


def default_bandwidth(x: np.ndarray) -> float:
    """Sum of per-column population variances of ``x``."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("default_bandwidth needs a 2-d array with at least 2 rows")
    bw = float(np.var(x, axis=0).sum())
    if bw <= 0.0:
        raise ValueError("data has zero variance; pass an explicit bandwidth")
    return bw


def resolve_bandwidth(spec: KernelSpec, x: np.ndarray) -> KernelSpec:
    if spec.kind != "rbf" or spec.bandwidth is not None:
        return spec
    return KernelSpec("rbf", default_bandwidth(x))


def _check_pair(x1: np.ndarray, x2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(x1, dtype=np.float64)
    b = np.asarray(x2, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ValueError(f"incompatible feature shapes {a.shape} and {b.shape}")
    return a, b


def gram(x1: np.ndarray, x2: np.ndarray, spec: KernelSpec) -> np.ndarray:
    """Kernel matrix with entry (i, j) = k(x1_i, x2_j)."""
    a, b = _check_pair(x1, x2)
    if spec.kind == "linear":
        return a @ b.T
    if spec.bandwidth is None:
        raise ValueError("rbf gram needs a concrete bandwidth; use resolve_bandwidth first")
    sq = np.sum(a * a, axis=1)[:, None] + np.sum(b * b, axis=1)[None, :] - 2.0 * (a @ b.T)
    np.maximum(sq, 0.0, out=sq)
    if x1 is x2:
        np.fill_diagonal(sq, 0.0)
    return np.exp(-sq / (2.0 * spec.bandwidth))


def kernel_rows(x1: np.ndarray, x2: np.ndarray, spec: KernelSpec) -> np.ndarray:
    """Per-row kernel values k(x1_i, x2_i) for aligned rows."""
    a, b = _check_pair(x1, x2)
    if a.shape[0] != b.shape[0]:
        raise ValueError("kernel_rows needs equally many rows")
    if spec.kind == "linear":
        return np.sum(a * b, axis=1)
    if spec.bandwidth is None:
        raise ValueError("rbf kernel_rows needs a concrete bandwidth")
    diff = a - b
    return np.exp(-np.sum(diff * diff, axis=1) / (2.0 * spec.bandwidth))
