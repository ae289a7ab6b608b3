"""Distribution divergence: MMD weight matrices and estimators, the proxy
A-distance, and the adaptive factor that balances marginal against
class-conditional alignment.

The weight matrices are the quadratic-form representation of biased MMD over
a joint source+target kernel matrix: ``trace(K @ M0)`` equals the biased
squared MMD between the domains, and each per-class matrix does the same for
the class-conditional subsets (target membership taken from pseudo-labels).

The adaptive factor is ``mu = 1 - d_m / (d_m + sum_c d_c)`` where every ``d``
is a proxy A-distance: ``2 * (1 - 2 * err)`` for the held-out error ``err`` of
a linear domain discriminator. ``mu -> 0`` weights marginal alignment,
``mu -> 1`` weights conditional alignment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.linear_model import LogisticRegression

from .data import FeatureMatrix, upsample
from .exceptions import ConfigError
from .kernel import KernelSpec, gram, kernel_rows, resolve_bandwidth


@dataclass(frozen=True)
class MmdMatrix:
    """Combined MMD weight matrix with the factor and domain sizes it was built from."""

    matrix: np.ndarray
    mu: float
    n_source: int
    n_target: int


def marginal_mmd_matrix(n_source: int, n_target: int) -> np.ndarray:
    """Weight matrix whose joint-gram trace equals the biased marginal MMD^2."""
    if n_source < 1 or n_target < 1:
        raise ValueError("both domains need at least one sample")
    a = np.concatenate([
        np.full(n_source, 1.0 / n_source),
        np.full(n_target, -1.0 / n_target),
    ])
    return np.outer(a, a)


def conditional_mmd_matrix(
    labels_source: np.ndarray, pseudo_target: np.ndarray, cls: int
) -> np.ndarray:
    """Per-class analogue of the marginal matrix over class-``cls`` subsets.

    Rows and columns follow the joint [source; target] ordering. If either
    domain has no members of the class the matrix is all zeros.
    """
    ys = np.asarray(labels_source, dtype=np.int64)
    yt = np.asarray(pseudo_target, dtype=np.int64)
    n, m = ys.shape[0], yt.shape[0]
    n_c = int(np.sum(ys == cls))
    m_c = int(np.sum(yt == cls))
    if n_c == 0 or m_c == 0:
        return np.zeros((n + m, n + m))
    a = np.concatenate([
        np.where(ys == cls, 1.0 / n_c, 0.0),
        np.where(yt == cls, -1.0 / m_c, 0.0),
    ])
    return np.outer(a, a)


def combine_mmd_matrices(
    marginal: np.ndarray,
    per_class: list[np.ndarray],
    mu: float,
    n_source: int,
    n_target: int,
) -> MmdMatrix:
    """Convex-style blend M = (1 - mu) * M0 + mu * sum_c M_c."""
    if not 0.0 <= mu <= 1.0:
        raise ValueError(f"mu must be in [0, 1], got {mu}")
    combined = (1.0 - mu) * marginal
    for mc in per_class:
        combined = combined + mu * mc
    return MmdMatrix(combined, float(mu), n_source, n_target)


def _values(x) -> np.ndarray:
    return x.values if isinstance(x, FeatureMatrix) else np.asarray(x, dtype=np.float64)


def mmd_biased(xs, xt, spec: KernelSpec) -> float:
    """Biased squared MMD from full gram blocks (mean_ss + mean_tt - 2 mean_st)."""
    a, b = _values(xs), _values(xt)
    spec = resolve_bandwidth(spec, np.vstack([a, b]))
    return float(
        gram(a, a, spec).mean() + gram(b, b, spec).mean() - 2.0 * gram(a, b, spec).mean()
    )


def mmd_linear(xs, xt, spec: KernelSpec, seed: int | None = None) -> float:
    """Streaming linear-time MMD estimate over consecutive sample quadruples.

    Both domains are truncated to min(n, m) rows (a trailing odd row is
    dropped) and consumed pairwise in order; pass a seed to shuffle each
    domain first. Unbiased, so small negative values are legitimate.
    """
    a, b = _values(xs), _values(xt)
    spec = resolve_bandwidth(spec, np.vstack([a, b]))
    if seed is not None:
        rng = np.random.default_rng(seed)
        a = a[rng.permutation(a.shape[0])]
        b = b[rng.permutation(b.shape[0])]
    pairs = min(a.shape[0], b.shape[0]) // 2
    if pairs == 0:
        raise ValueError("need at least 2 samples per domain for the streaming estimate")
    s1, s2 = a[0 : 2 * pairs : 2], a[1 : 2 * pairs : 2]
    t1, t2 = b[0 : 2 * pairs : 2], b[1 : 2 * pairs : 2]
    terms = (
        kernel_rows(s1, s2, spec)
        + kernel_rows(t1, t2, spec)
        - kernel_rows(s1, t2, spec)
        - kernel_rows(s2, t1, spec)
    )
    return float(terms.mean())


def a_distance(xa, xb, seed: int, rounds: int = 5) -> float:
    """Proxy A-distance: 2 * (1 - 2 * err) for a linear domain discriminator.

    The smaller set is upsampled to the larger's size, the union is split
    50/50 stratified by domain, and an L2-regularized logistic regression
    (C = 1.0, deterministic batch solver) supplies the held-out error,
    clamped to at most chance. Averaged over ``rounds`` derived seeds.
    """
    a, b = _values(xa), _values(xb)
    if a.shape[0] < 2 or b.shape[0] < 2:
        raise ValueError("a_distance needs at least 2 samples per set")
    size = max(a.shape[0], b.shape[0])
    children = np.random.SeedSequence(seed).spawn(rounds)
    total = 0.0
    for child in children:
        sub = child.generate_state(2)
        fa = upsample(FeatureMatrix(a), size, int(sub[0])).values if a.shape[0] < size else a
        fb = upsample(FeatureMatrix(b), size, int(sub[0])).values if b.shape[0] < size else b
        rng = np.random.default_rng(int(sub[1]))
        half = size // 2
        perm_a = rng.permutation(size)
        perm_b = rng.permutation(size)
        x_train = np.vstack([fa[perm_a[:half]], fb[perm_b[:half]]])
        y_train = np.concatenate([np.zeros(half), np.ones(half)])
        x_test = np.vstack([fa[perm_a[half:]], fb[perm_b[half:]]])
        y_test = np.concatenate([np.zeros(size - half), np.ones(size - half)])
        clf = LogisticRegression(C=1.0, solver="lbfgs", max_iter=1000)
        clf.fit(x_train, y_train)
        err = float(np.mean(clf.predict(x_test) != y_test))
        total += 2.0 * (1.0 - 2.0 * min(err, 0.5))
    return total / rounds


@dataclass(frozen=True)
class MuEstimate:
    """Adaptive factor with the distances behind it; skipped classes had
    fewer than two samples on one side and contributed zero."""

    mu: float
    d_marginal: float
    d_conditional: tuple[float, ...]
    rounds: int
    skipped_classes: tuple[int, ...] = ()


def estimate_mu(
    zs: FeatureMatrix,
    zt,
    pseudo_target: np.ndarray,
    seed: int,
    rounds: int = 5,
    class_count: int | None = None,
) -> MuEstimate:
    """Adaptive factor mu = 1 - d_m / (d_m + sum_c d_c), clamped to [0, 1].

    ``zs`` must carry true source labels; target conditioning comes from
    ``pseudo_target``. A zero denominator (all distances zero) returns the
    neutral value 0.5.
    """
    ys = zs.require_labels()
    zt_values = _values(zt)
    pseudo = np.asarray(pseudo_target, dtype=np.int64)
    if pseudo.shape[0] != zt_values.shape[0]:
        raise ValueError("pseudo_target length must match the target sample count")
    count = class_count if class_count is not None else int(ys.max())
    children = np.random.SeedSequence(seed).spawn(count + 1)

    d_m = a_distance(zs.values, zt_values, int(children[0].generate_state(1)[0]), rounds)
    d_cs: list[float] = []
    skipped: list[int] = []
    for cls in range(1, count + 1):
        src = zs.values[ys == cls]
        tgt = zt_values[pseudo == cls]
        if src.shape[0] < 2 or tgt.shape[0] < 2:
            d_cs.append(0.0)
            skipped.append(cls)
            continue
        d_cs.append(a_distance(src, tgt, int(children[cls].generate_state(1)[0]), rounds))

    denom = d_m + sum(d_cs)
    mu = 0.5 if denom == 0.0 else 1.0 - d_m / denom
    mu = min(1.0, max(0.0, mu))
    return MuEstimate(mu, d_m, tuple(d_cs), rounds, tuple(skipped))


# --- factor strategies -----------------------------------------------------


@dataclass(frozen=True)
class FixedMu:
    """Use one constant factor every iteration."""

    value: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.value <= 1.0:
            raise ConfigError(f"fixed mu must be in [0, 1], got {self.value}")


@dataclass(frozen=True)
class EstimateMu:
    """Re-estimate the factor from the data each iteration."""

    rounds: int = 5

    def __post_init__(self) -> None:
        if self.rounds < 1:
            raise ConfigError(f"rounds must be >= 1, got {self.rounds}")


@dataclass(frozen=True)
class GridAverageMu:
    """Run the full fit once per grid value and average the accuracies."""

    def values(self) -> tuple[float, ...]:
        return tuple(round(i / 10, 1) for i in range(11))


@dataclass(frozen=True)
class RandomAverageMu:
    """Run the full fit for ``draws`` random factors and average the accuracies."""

    draws: int
    seed: int

    def __post_init__(self) -> None:
        if self.draws < 1:
            raise ConfigError(f"draws must be >= 1, got {self.draws}")

    def values(self) -> tuple[float, ...]:
        rng = np.random.default_rng(self.seed)
        return tuple(float(v) for v in rng.uniform(0.0, 1.0, self.draws))


MuStrategy = FixedMu | EstimateMu | GridAverageMu | RandomAverageMu


def mu_schedule(
    kind: str,
    value: float | None = None,
    draws: int | None = None,
    seed: int | None = None,
    rounds: int = 5,
) -> MuStrategy:
    """Build a factor strategy by name: fixed, estimate, grid, or random."""
    if kind == "fixed":
        if value is None:
            raise ConfigError("fixed strategy needs a value")
        return FixedMu(value)
    if kind == "estimate":
        return EstimateMu(rounds)
    if kind == "grid":
        return GridAverageMu()
    if kind == "random":
        if draws is None or seed is None:
            raise ConfigError("random strategy needs draws and a seed")
        return RandomAverageMu(draws, seed)
    raise ConfigError(f"unknown mu strategy {kind!r}")
