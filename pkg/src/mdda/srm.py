"""Regularized kernel classifier over the joint source+target sample set.

The decision function is a kernel expansion over all training rows; its
coefficients solve

    ((A + lam * M + rho * L) @ K + eta * I) beta = A @ Y^T

where A masks the squared loss to labeled (source) columns, M is the combined
MMD weight matrix, L the graph Laplacian, and K the joint gram matrix. That
linear system is the stationarity condition of

    || (Y - beta^T K) A ||_F^2 + eta * tr(beta^T K beta)
        + tr(beta^T K (lam * M + rho * L) K beta)
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass

import numpy as np

from .data import DomainPair, FeatureMatrix
from .exceptions import DataError, NumericError
from .kernel import KernelSpec, gram

FORMAT_VERSION = 1


@dataclass(frozen=True)
class LabelMatrix:
    """One-hot class targets over joint columns plus the source indicator diagonal."""

    targets: np.ndarray  # (C, n + m), zero on target columns
    indicator: np.ndarray  # (n + m,), 1.0 on source columns


def build_labels(pair: DomainPair) -> LabelMatrix:
    ys = pair.source.require_labels()
    n, m, c = pair.n_source, pair.n_target, pair.class_count
    targets = np.zeros((c, n + m))
    targets[ys - 1, np.arange(n)] = 1.0
    indicator = np.concatenate([np.ones(n), np.zeros(m)])
    return LabelMatrix(targets, indicator)


def _indicator_vector(a: np.ndarray, n: int) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 2:
        a = np.diag(a)
    if a.shape != (n,):
        raise ValueError(f"indicator must have {n} entries, got shape {a.shape}")
    return a


def solve_beta(
    k: np.ndarray,
    m: np.ndarray,
    laplacian: np.ndarray,
    indicator: np.ndarray,
    targets: np.ndarray,
    lam: float,
    rho: float,
    eta: float,
) -> np.ndarray:
    """Coefficients beta of shape (n + m, C); the indicator may be the
    diagonal vector or the full diagonal matrix."""
    if lam < 0 or rho < 0 or eta < 0:
        raise ValueError("lam, rho, and eta must be non-negative")
    size = k.shape[0]
    a = _indicator_vector(indicator, size)
    lhs = (np.diag(a) + lam * m + rho * laplacian) @ k + eta * np.eye(size)
    rhs = a[:, None] * targets.T
    try:
        beta = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericError(
            "coefficient system is singular; eta > 0 guarantees invertibility"
        ) from exc
    return beta


def objective(
    beta: np.ndarray,
    k: np.ndarray,
    m: np.ndarray,
    laplacian: np.ndarray,
    indicator: np.ndarray,
    targets: np.ndarray,
    lam: float,
    rho: float,
    eta: float,
) -> float:
    """Value the solver minimizes; used by the optimality checks and reports."""
    a = _indicator_vector(indicator, k.shape[0])
    kb = k @ beta
    residual = (targets - kb.T) * a[None, :]
    loss = float(np.sum(residual * residual))
    smooth = float(eta * np.trace(beta.T @ kb))
    align = float(np.sum(kb * ((lam * m + rho * laplacian) @ kb)))
    return loss + smooth + align


@dataclass(frozen=True)
class FittedModel:
    """Everything needed to score new samples.

    ``train_features`` live in the space the kernel was computed in (the
    geodesic space when the manifold step was enabled); ``input_transform``
    maps raw inputs there (applied after row normalization when
    ``normalize_inputs`` is set) and is None when fitting used raw features.
    """

    beta: np.ndarray
    train_features: np.ndarray
    kernel: KernelSpec
    label_names: tuple[str, ...] | None
    mu_final: float
    input_transform: np.ndarray | None = None
    normalize_inputs: bool = False

    @property
    def class_count(self) -> int:
        return self.beta.shape[1]


def predict_scores(model: FittedModel, z) -> np.ndarray:
    """Class scores for samples already living in the model's feature space."""
    values = z.values if isinstance(z, FeatureMatrix) else np.asarray(z, dtype=np.float64)
    return gram(values, model.train_features, model.kernel) @ model.beta


def predict(model: FittedModel, z) -> np.ndarray:
    """Hard labels 1..C; score ties resolve to the lowest class id."""
    return np.argmax(predict_scores(model, z), axis=1).astype(np.int64) + 1


def predict_raw(model: FittedModel, x) -> np.ndarray:
    """Hard labels for raw inputs, applying the stored manifold mapping."""
    values = x.values if isinstance(x, FeatureMatrix) else np.asarray(x, dtype=np.float64)
    if model.normalize_inputs:
        from .manifold import l2_normalize_rows

        values = l2_normalize_rows(values)
    if model.input_transform is not None:
        values = values @ model.input_transform
    return predict(model, values)


def accuracy(predicted: np.ndarray, truth: np.ndarray) -> float:
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape:
        raise ValueError(f"length mismatch: {predicted.shape} vs {truth.shape}")
    return float(np.mean(predicted == truth))


def save_model(model: FittedModel, path) -> None:
    """Persist the model as one .npz bundle with a JSON metadata member."""
    meta = {
        "format_version": FORMAT_VERSION,
        "kernel": {"kind": model.kernel.kind, "bandwidth": model.kernel.bandwidth},
        "label_names": list(model.label_names) if model.label_names else None,
        "mu_final": model.mu_final,
        "normalize_inputs": model.normalize_inputs,
        "has_transform": model.input_transform is not None,
    }
    arrays = {
        "beta": model.beta,
        "train_features": model.train_features,
        "meta_json": np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8),
    }
    if model.input_transform is not None:
        arrays["input_transform"] = model.input_transform
    buffer = io.BytesIO()
    np.savez(buffer, **arrays)
    with open(path, "wb") as fh:
        fh.write(buffer.getvalue())


def load_model(path) -> FittedModel:
    try:
        bundle_ctx = np.load(path)
    except OSError as exc:
        raise DataError(f"cannot read model {path}: {exc}") from exc
    with bundle_ctx as bundle:
        meta = json.loads(bytes(bundle["meta_json"].tobytes()).decode("utf-8"))
        if meta.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported model format: {meta.get('format_version')}")
        names = meta["label_names"]
        return FittedModel(
            beta=bundle["beta"],
            train_features=bundle["train_features"],
            kernel=KernelSpec(meta["kernel"]["kind"], meta["kernel"]["bandwidth"]),
            label_names=tuple(names) if names else None,
            mu_final=float(meta["mu_final"]),
            input_transform=bundle["input_transform"] if meta["has_transform"] else None,
            normalize_inputs=bool(meta["normalize_inputs"]),
        )
