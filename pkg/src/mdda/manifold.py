"""Geodesic-flow-kernel features on the Grassmann manifold.

Two PCA subspaces (one per domain) define endpoints of a geodesic of
subspaces; integrating projections onto every intermediate subspace yields a
single positive semidefinite matrix ``G`` such that the integrated inner
product of two samples equals ``x_i^T G x_j``. Samples are then mapped once
through ``sqrt(G)`` and all downstream modules operate in that space.

The closed form is assembled from the principal angles between the two
subspaces. Each spectral coefficient is an exact integral over the geodesic
parameter: with ``u = 2*theta``,

    l1 = integral of cos^2(t*theta)      = (1 + sin(u)/u) / 2
    l2 = integral of -cos(t*theta)sin(t*theta) = ((cos(u) - 1)/u) / 2
    l3 = integral of sin^2(t*theta)      = (1 - sin(u)/u) / 2

with limits (1, 0, 0) as theta -> 0, so identical subspaces give exactly the
projector onto their common span.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import FeatureMatrix

# principal angles below this are treated as exactly zero
ANGLE_CLAMP = 1e-8


@dataclass(frozen=True)
class Subspace:
    """Orthonormal basis (columns) of a linear subspace."""

    basis: np.ndarray

    def __post_init__(self) -> None:
        basis = np.asarray(self.basis, dtype=np.float64)
        if basis.ndim != 2 or basis.shape[0] < basis.shape[1] or basis.shape[1] < 1:
            raise ValueError(f"basis must be a tall 2-d matrix, got shape {basis.shape}")
        gram = basis.T @ basis
        if not np.allclose(gram, np.eye(basis.shape[1]), atol=1e-8):
            raise ValueError("basis columns must be orthonormal")
        basis = basis.copy()
        basis.setflags(write=False)
        object.__setattr__(self, "basis", basis)

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


@dataclass(frozen=True)
class GeodesicKernel:
    """Closed-form geodesic kernel: G, its symmetric square root, and the angles."""

    kernel: np.ndarray
    sqrt_kernel: np.ndarray
    angles: np.ndarray


def l2_normalize_rows(x: np.ndarray) -> np.ndarray:
    """Scale each row to unit L2 norm; all-zero rows pass through unchanged."""
    x = np.asarray(x, dtype=np.float64)
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    safe = np.where(norms > 0.0, norms, 1.0)
    return x / safe


def pca_basis(x: np.ndarray, d: int) -> Subspace:
    """Top-d principal directions of the column-centered data.

    Columns are ordered by decreasing explained variance and sign-fixed so
    each column's largest-magnitude entry is positive. Raises if the centered
    data does not have rank at least ``d``.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {x.shape}")
    n, dim = x.shape
    if not 1 <= d <= min(dim, n - 1):
        raise ValueError(f"d must satisfy 1 <= d <= min(dim, n - 1) = {min(dim, n - 1)}, got {d}")
    centered = x - x.mean(axis=0)
    _, svals, vt = np.linalg.svd(centered, full_matrices=False)
    tol = max(n, dim) * np.finfo(np.float64).eps * (svals[0] if svals.size else 0.0)
    if svals[d - 1] <= tol:
        raise ValueError(f"centered data has rank < {d}; cannot extract {d} principal directions")
    basis = vt[:d].T.copy()
    for j in range(d):
        col = basis[:, j]
        if col[np.argmax(np.abs(col))] < 0:
            basis[:, j] = -col
    return Subspace(basis)


def _flow_coefficients(theta: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact geodesic integrals (l1, l2, l3) per principal angle."""
    theta = np.asarray(theta, dtype=np.float64)
    l1 = np.ones_like(theta)
    l2 = np.zeros_like(theta)
    l3 = np.zeros_like(theta)
    big = theta >= ANGLE_CLAMP
    u = 2.0 * theta[big]
    l1[big] = 0.5 * (1.0 + np.sin(u) / u)
    l2[big] = 0.5 * ((np.cos(u) - 1.0) / u)
    l3[big] = 0.5 * (1.0 - np.sin(u) / u)
    return l1, l2, l3


def gfk(source: Subspace, target: Subspace) -> GeodesicKernel:
    """Closed-form geodesic flow kernel between two equal-dimension subspaces.

    Requires ``2 * d <= D`` so the orthogonal complement of the source
    subspace can absorb the flow's out-of-subspace component. The returned
    ``angles`` are the principal angles in [0, pi/2], ascending.
    """
    if source.basis.shape != target.basis.shape:
        raise ValueError(
            f"subspace shapes differ: {source.basis.shape} vs {target.basis.shape}"
        )
    dim, d = source.basis.shape
    if 2 * d > dim:
        raise ValueError(f"need 2*d <= ambient dim for the complement, got d={d}, dim={dim}")

    ps = source.basis
    # full orthonormal complement of the source subspace
    u_full, _, _ = np.linalg.svd(ps, full_matrices=True)
    rs = u_full[:, d:]

    u1, gamma, vt = np.linalg.svd(ps.T @ target.basis)
    v = vt.T
    gamma = np.clip(gamma, 0.0, 1.0)
    theta = np.arccos(gamma)  # ascending: gamma is descending

    # the secondary factor shares V; its columns have norm sin(theta_i)
    c = -(rs.T @ target.basis) @ v
    u2 = np.zeros((dim - d, d))
    sin_t = np.sin(theta)
    for i in range(d):
        if theta[i] >= ANGLE_CLAMP:
            u2[:, i] = c[:, i] / sin_t[i]

    l1, l2, l3 = _flow_coefficients(theta)
    left = np.hstack([ps @ u1, rs @ u2])
    lam = np.block([
        [np.diag(l1), np.diag(l2)],
        [np.diag(l2), np.diag(l3)],
    ])
    kernel = left @ lam @ left.T
    kernel = 0.5 * (kernel + kernel.T)

    evals, evecs = np.linalg.eigh(kernel)
    evals = np.clip(evals, 0.0, None)
    sqrt_kernel = (evecs * np.sqrt(evals)) @ evecs.T
    sqrt_kernel = 0.5 * (sqrt_kernel + sqrt_kernel.T)
    return GeodesicKernel(kernel, sqrt_kernel, theta)


def transform(gk: GeodesicKernel, features: FeatureMatrix | np.ndarray):
    """Map samples into the geodesic space: z_i = sqrt(G) x_i, labels carried."""
    x = features.values if isinstance(features, FeatureMatrix) else np.asarray(features, float)
    if x.ndim != 2 or x.shape[1] != gk.sqrt_kernel.shape[0]:
        raise ValueError(
            f"features of shape {x.shape} do not match kernel dim {gk.sqrt_kernel.shape[0]}"
        )
    z = x @ gk.sqrt_kernel
    if isinstance(features, FeatureMatrix):
        return FeatureMatrix(z, features.labels, features.label_names)
    return z
