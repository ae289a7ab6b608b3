"""End-to-end manifold dynamic distribution adaptation.

The fit proceeds in two stages. First the geometry: per-domain PCA subspaces
feed the geodesic flow kernel, both domains are mapped through sqrt(G), and a
1-nearest-neighbor source classifier seeds target pseudo-labels. Then the
loop: each iteration picks the adaptive factor (re-estimated from proxy
A-distances or supplied), blends the marginal and class-conditional MMD
matrices with it, solves the regularized representer system over the joint
kernel, and re-predicts the target pseudo-labels. The joint gram matrix, the
graph Laplacian, and the label targets are computed once outside the loop.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .data import DomainPair, FeatureMatrix
from .divergence import (
    EstimateMu,
    FixedMu,
    GridAverageMu,
    MuStrategy,
    RandomAverageMu,
    combine_mmd_matrices,
    conditional_mmd_matrix,
    estimate_mu,
    marginal_mmd_matrix,
)
from .exceptions import ConfigError, DataError, NumericError
from .graph import build_graph
from .kernel import KernelSpec, gram, resolve_bandwidth
from .manifold import gfk, l2_normalize_rows, pca_basis
from .srm import FittedModel, accuracy, build_labels, objective, solve_beta

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MddaConfig:
    """Hyperparameters of one adaptation run.

    ``d`` is the per-domain subspace dimension and has no default: it depends
    on the feature family. ``kernel.bandwidth`` of None resolves to the
    variance of the transformed inputs at fit time. ``use_manifold=False``
    skips row normalization and the geodesic step entirely (features are used
    raw), which together with ``lam = rho = 0`` reduces the fit to a
    source-only kernel classifier.
    """

    d: int
    iterations: int = 10
    lam: float = 4.5
    eta: float = 0.1
    rho: float = 1.0
    p: int = 10
    kernel: KernelSpec = KernelSpec("rbf", None)
    mu: MuStrategy = EstimateMu()
    seed: int = 0
    use_manifold: bool = True

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ConfigError(f"d must be >= 1, got {self.d}")
        if self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")
        if self.lam < 0 or self.eta < 0 or self.rho < 0:
            raise ConfigError("lam, eta, and rho must be non-negative")
        if self.p < 1:
            raise ConfigError(f"p must be >= 1, got {self.p}")


@dataclass(frozen=True)
class IterationRecord:
    """Scalar trace of one loop pass plus the target score rows behind it."""

    iteration: int
    mu: float
    churn: float
    objective: float
    accuracy: float | None = None
    scores: np.ndarray | None = field(default=None, repr=False, compare=False)

    def as_json_record(self) -> dict:
        return {
            "iteration": self.iteration,
            "mu": self.mu,
            "churn": self.churn,
            "objective": self.objective,
            "accuracy": self.accuracy,
        }


@dataclass(frozen=True)
class AdaptationReport:
    """Per-iteration records of one fit, in order."""

    records: tuple[IterationRecord, ...]

    @property
    def mu_final(self) -> float:
        return self.records[-1].mu

    @property
    def final_accuracy(self) -> float | None:
        return self.records[-1].accuracy


@dataclass(frozen=True)
class EvaluationResult:
    """Outcome of evaluate(): one report, or one per factor value for the
    averaging strategies (accuracy is then the mean of the final accuracies)."""

    accuracy: float
    mu_final: float | None
    report: AdaptationReport | None
    per_mu: tuple[tuple[float, AdaptationReport], ...] | None


def nearest_neighbor_labels(train: FeatureMatrix, query: np.ndarray) -> np.ndarray:
    """1NN labels under euclidean distance; ties go to the lowest train index."""
    labels = train.require_labels()
    q = np.asarray(query, dtype=np.float64)
    d2 = (
        np.sum(q * q, axis=1)[:, None]
        + np.sum(train.values * train.values, axis=1)[None, :]
        - 2.0 * (q @ train.values.T)
    )
    return labels[np.argmin(d2, axis=1)]


def _iteration_seed(seed: int, iteration: int) -> int:
    return int(np.random.SeedSequence([seed, 101, iteration]).generate_state(1)[0])


def _default_mu_estimator(
    zs: FeatureMatrix, zt: FeatureMatrix, pseudo: np.ndarray, seed: int, rounds: int,
    class_count: int,
) -> float:
    return estimate_mu(zs, zt, pseudo, seed, rounds, class_count).mu


def fit(pair: DomainPair, cfg: MddaConfig, mu_estimator=None):
    """Run the full adaptation and return (FittedModel, AdaptationReport).

    Deterministic for identical (pair, cfg). Averaging strategies (grid,
    random) drive several full fits and live in evaluate(); passing one here
    is a config error. ``mu_estimator`` swaps the factor estimator for
    instrumentation and must match _default_mu_estimator's signature.
    """
    if isinstance(cfg.mu, (GridAverageMu, RandomAverageMu)):
        raise ConfigError("averaging mu strategies run under evaluate(), not fit()")
    estimator = mu_estimator if mu_estimator is not None else _default_mu_estimator

    xs, xt = pair.source, pair.target
    if cfg.use_manifold:
        xs_values = l2_normalize_rows(xs.values)
        xt_values = l2_normalize_rows(xt.values)
        geo = gfk(pca_basis(xs_values, cfg.d), pca_basis(xt_values, cfg.d))
        zs_values = xs_values @ geo.sqrt_kernel
        zt_values = xt_values @ geo.sqrt_kernel
        input_transform = geo.sqrt_kernel
    else:
        zs_values, zt_values = xs.values, xt.values
        input_transform = None

    zs = FeatureMatrix(zs_values, xs.labels, xs.label_names)
    zt = FeatureMatrix(zt_values, xt.labels, xt.label_names)
    pseudo = nearest_neighbor_labels(zs, zt_values)

    n, m, classes = pair.n_source, pair.n_target, pair.class_count
    joint = np.vstack([zs_values, zt_values])
    kspec = resolve_bandwidth(cfg.kernel, joint)
    k = gram(joint, joint, kspec)
    laplacian = build_graph(joint, cfg.p).laplacian
    labmat = build_labels(pair)
    marginal = marginal_mmd_matrix(n, m)

    records: list[IterationRecord] = []
    beta = None
    for it in range(1, cfg.iterations + 1):
        if isinstance(cfg.mu, FixedMu):
            mu_t = cfg.mu.value
        else:
            mu_t = estimator(
                zs, zt, pseudo, _iteration_seed(cfg.seed, it), cfg.mu.rounds, classes
            )
        per_class = [conditional_mmd_matrix(zs.labels, pseudo, c) for c in range(1, classes + 1)]
        m_mat = combine_mmd_matrices(marginal, per_class, mu_t, n, m).matrix
        beta = solve_beta(
            k, m_mat, laplacian, labmat.indicator, labmat.targets, cfg.lam, cfg.rho, cfg.eta
        )
        value = objective(
            beta, k, m_mat, laplacian, labmat.indicator, labmat.targets,
            cfg.lam, cfg.rho, cfg.eta,
        )
        if not np.isfinite(value):
            raise NumericError(f"objective became non-finite at iteration {it}")
        scores = k[n:, :] @ beta
        new_pseudo = np.argmax(scores, axis=1).astype(np.int64) + 1
        churn = float(np.mean(new_pseudo != pseudo))
        acc = accuracy(new_pseudo, xt.labels) if xt.labels is not None else None
        records.append(IterationRecord(it, float(mu_t), churn, float(value), acc, scores))
        logger.debug(
            "iteration %d: mu=%.4f churn=%.4f objective=%.6g accuracy=%s",
            it, mu_t, churn, value, acc,
        )
        pseudo = new_pseudo

    model = FittedModel(
        beta=beta,
        train_features=joint,
        kernel=kspec,
        label_names=xs.label_names,
        mu_final=records[-1].mu,
        input_transform=input_transform,
        normalize_inputs=cfg.use_manifold,
    )
    return model, AdaptationReport(tuple(records))


def evaluate(pair: DomainPair, cfg: MddaConfig) -> EvaluationResult:
    """Fit and score against true target labels (required here).

    For the averaging strategies this runs one full fit per factor value and
    reports the mean of the final accuracies alongside every per-value report.
    """
    if pair.target.labels is None:
        raise DataError("evaluate requires target labels")
    if isinstance(cfg.mu, (GridAverageMu, RandomAverageMu)):
        runs = []
        for value in cfg.mu.values():
            _, report = fit(pair, replace(cfg, mu=FixedMu(value)))
            runs.append((value, report))
        mean_acc = float(np.mean([report.final_accuracy for _, report in runs]))
        return EvaluationResult(mean_acc, None, None, tuple(runs))
    _, report = fit(pair, cfg)
    assert report.final_accuracy is not None
    return EvaluationResult(report.final_accuracy, report.mu_final, report, None)
