"""Nearest-neighbor affinity graph and its unnormalized Laplacian."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AffinityGraph:
    """Symmetric edge weights W, Laplacian L = diag(W 1) - W, and the p used."""

    weights: np.ndarray
    laplacian: np.ndarray
    neighbors: int


def build_graph(z: np.ndarray, p: int) -> AffinityGraph:
    """p-nearest-neighbor graph on shifted cosine similarity.

    Similarity is (1 + cos) / 2, so weights live in [0, 1]. Neighborhoods are
    the p most similar other rows (ties broken toward the lower index) and an
    edge survives if either endpoint selects the other. Zero-norm rows are
    assigned cosine 0 against everything, with a warning.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {z.shape}")
    n = z.shape[0]
    if not 1 <= p <= n - 1:
        raise ValueError(f"p must satisfy 1 <= p <= n - 1 = {n - 1}, got {p}")

    norms = np.linalg.norm(z, axis=1)
    if np.any(norms == 0.0):
        warnings.warn("zero-norm rows in graph input; treating their cosine as 0")
    unit = z / np.where(norms > 0.0, norms, 1.0)[:, None]
    cos = np.clip(unit @ unit.T, -1.0, 1.0)
    cos = 0.5 * (cos + cos.T)
    sim = 0.5 * (1.0 + cos)

    ranked = sim.copy()
    np.fill_diagonal(ranked, -np.inf)  # a row never selects itself
    order = np.argsort(-ranked, axis=1, kind="stable")[:, :p]
    selected = np.zeros((n, n), dtype=bool)
    np.put_along_axis(selected, order, True, axis=1)
    keep = selected | selected.T

    weights = np.where(keep, sim, 0.0)
    np.fill_diagonal(weights, 0.0)
    laplacian = np.diag(weights.sum(axis=1)) - weights
    return AffinityGraph(weights, laplacian, p)
