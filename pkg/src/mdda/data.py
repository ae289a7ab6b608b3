"""Feature containers, CSV i/o, upsampling, and synthetic shifted-domain generation.

CSV files are UTF-8 and comma-separated with ``.`` decimals. A file may be
headerless (all columns are features) or carry a header row; a label column
can only be addressed by name, so labels require a header. Label tokens are
encoded to contiguous integer ids ``1..C`` by lexicographic order of the
original token strings.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import ConfigError, DataError

SHIFT_KINDS = ("marginal", "conditional", "mixed")


@dataclass(frozen=True)
class FeatureMatrix:
    """Immutable bundle of row-major features and optional integer labels.

    ``values`` is coerced to a read-only float64 array of shape (n, dim);
    ``labels``, when present, is a read-only int64 array of shape (n,) with
    entries in ``1..C``. ``label_names[c - 1]`` is the original token for
    class id ``c`` when the matrix was read from a labeled file.
    """

    values: np.ndarray
    labels: np.ndarray | None = None
    label_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DataError(f"feature matrix must be 2-d, got shape {values.shape}")
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise DataError(f"feature matrix must be at least 1x1, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DataError("feature matrix contains non-finite entries")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.int64)
            if labels.ndim != 1 or labels.shape[0] != values.shape[0]:
                raise DataError(
                    f"labels must be 1-d with {values.shape[0]} entries, got shape {labels.shape}"
                )
            if labels.min(initial=1) < 1:
                raise DataError("labels must be integers >= 1")
            labels = labels.copy()
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def require_labels(self) -> np.ndarray:
        if self.labels is None:
            raise DataError("labels are required but absent")
        return self.labels


@dataclass(frozen=True)
class DomainPair:
    """A labeled source domain and a target domain over the same feature space."""

    source: FeatureMatrix
    target: FeatureMatrix
    class_count: int = 0  # 0 means infer from the source labels

    def __post_init__(self) -> None:
        if self.source.labels is None:
            raise DataError("source domain must be labeled")
        if self.source.dim != self.target.dim:
            raise DataError(
                f"source and target dimensions differ: {self.source.dim} vs {self.target.dim}"
            )
        count = self.class_count
        if count == 0:
            count = int(self.source.labels.max())
            object.__setattr__(self, "class_count", count)
        if count < 1:
            raise DataError(f"class_count must be >= 1, got {count}")
        if int(self.source.labels.max()) > count:
            raise DataError("source labels exceed class_count")
        if self.target.labels is not None and int(self.target.labels.max()) > count:
            raise DataError("target labels exceed class_count")

    @property
    def n_source(self) -> int:
        return self.source.n

    @property
    def n_target(self) -> int:
        return self.target.n


def _is_float(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def load_features(path: str | Path, label_column: str | None = None) -> FeatureMatrix:
    """Read a CSV feature file, optionally splitting off a named label column.

    Header presence is detected from the first row: if every cell parses as a
    float the file is treated as headerless. Addressing a label column
    therefore requires a header. Raises DataError on empty files, ragged
    rows, unknown label columns, and non-numeric feature cells; parse errors
    name the offending row and column (1-based, counting the header).
    """
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [row for row in csv.reader(fh) if row]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: file is empty")

    has_header = not all(_is_float(cell) for cell in rows[0])
    if label_column is not None and not has_header:
        raise DataError(f"{path}: label column {label_column!r} requires a header row")

    header = rows[0] if has_header else None
    data_rows = rows[1:] if has_header else rows
    if not data_rows:
        raise DataError(f"{path}: no data rows")

    width = len(rows[0])
    label_idx: int | None = None
    if label_column is not None:
        assert header is not None
        if label_column not in header:
            raise DataError(f"{path}: no column named {label_column!r} in header")
        label_idx = header.index(label_column)

    first_data_row = 2 if has_header else 1
    values: list[list[float]] = []
    tokens: list[str] = []
    for i, row in enumerate(data_rows):
        if len(row) != width:
            raise DataError(
                f"{path}: row {first_data_row + i} has {len(row)} cells, expected {width}"
            )
        feats: list[float] = []
        for j, cell in enumerate(row):
            if j == label_idx:
                tokens.append(cell)
                continue
            try:
                feats.append(float(cell))
            except ValueError:
                raise DataError(
                    f"{path}: row {first_data_row + i}, column {j + 1}: "
                    f"cannot parse {cell!r} as a number"
                ) from None
        values.append(feats)

    if label_idx is None:
        return FeatureMatrix(np.array(values, dtype=np.float64))
    names = sorted(set(tokens))
    ids = {name: c + 1 for c, name in enumerate(names)}
    labels = np.array([ids[t] for t in tokens], dtype=np.int64)
    return FeatureMatrix(np.array(values, dtype=np.float64), labels, tuple(names))


def write_features(fm: FeatureMatrix, path: str | Path, label_column: str = "label") -> None:
    """Write a feature matrix to CSV; labeled matrices get a header row.

    Unlabeled matrices are written headerless so that
    ``load_features(write_features(fm))`` round-trips either way.
    """
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if fm.labels is not None:
            writer.writerow([f"f{j}" for j in range(fm.dim)] + [label_column])
            for row, lab in zip(fm.values, fm.labels):
                token = fm.label_names[lab - 1] if fm.label_names else str(int(lab))
                writer.writerow([repr(float(v)) for v in row] + [token])
        else:
            for row in fm.values:
                writer.writerow([repr(float(v)) for v in row])


def upsample(samples: FeatureMatrix, target_count: int, seed: int) -> FeatureMatrix:
    """Replicate whole rows until the matrix has ``target_count`` rows.

    Every original row appears at least ``target_count // n`` times; the
    remainder is drawn uniformly with replacement from the originals using the
    seeded generator. Labels are replicated along with their rows.
    """
    n = samples.n
    if target_count < n:
        raise ValueError(f"target_count {target_count} is below the current row count {n}")
    base = target_count // n
    extra = target_count - base * n
    rng = np.random.default_rng(seed)
    idx = np.concatenate([np.repeat(np.arange(n), base), rng.integers(0, n, size=extra)])
    labels = samples.labels[idx] if samples.labels is not None else None
    return FeatureMatrix(samples.values[idx], labels, samples.label_names)


@dataclass(frozen=True)
class ShiftSpec:
    """Recipe for a synthetic domain-adaptation task with a known shift kind.

    ``marginal`` translates the whole target domain by one random offset of
    norm ``magnitude``; ``conditional`` moves every class-conditional mean by
    ``magnitude`` (chord length, capped at ``separation``) while keeping the
    pooled mean and covariance matched between domains; ``mixed`` applies
    both. Classes are unit-variance Gaussians in signed pairs at
    ``±(separation / 2)`` along orthonormal axes, so the pooled mean is zero
    by construction; an odd leftover class sits at the origin.
    """

    kind: str
    classes: int
    n_per_class: int
    magnitude: float
    seed: int
    dim: int = 8
    separation: float = 4.0
    noise: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in SHIFT_KINDS:
            raise ConfigError(f"unknown shift kind {self.kind!r}, expected one of {SHIFT_KINDS}")
        if self.classes < 2:
            raise ConfigError(f"classes must be >= 2, got {self.classes}")
        if self.n_per_class < 1:
            raise ConfigError(f"n_per_class must be >= 1, got {self.n_per_class}")
        if self.magnitude < 0:
            raise ConfigError(f"magnitude must be >= 0, got {self.magnitude}")
        if self.separation <= 0 or self.noise <= 0:
            raise ConfigError("separation and noise must be positive")
        # each class pair consumes two orthonormal axes (mean axis + rotation axis)
        if self.dim < 2 * (self.classes // 2):
            raise ConfigError(
                f"dim {self.dim} too small for {self.classes} classes, need >= "
                f"{2 * (self.classes // 2)}"
            )


def make_shift_dataset(spec: ShiftSpec) -> DomainPair:
    """Generate a (source, target) pair exhibiting the spec's shift kind.

    Deterministic per seed. The target keeps its true labels so evaluation
    and construction oracles can use them.
    """
    rng = np.random.default_rng(spec.seed)
    frame, _ = np.linalg.qr(rng.standard_normal((spec.dim, spec.dim)))
    offset_dir = rng.standard_normal(spec.dim)
    offset = spec.magnitude * offset_dir / np.linalg.norm(offset_dir)

    radius = spec.separation / 2.0
    src_means = np.zeros((spec.classes, spec.dim))
    tgt_means = np.zeros((spec.classes, spec.dim))
    rotate = spec.kind in ("conditional", "mixed")
    chord = min(spec.magnitude, spec.separation)
    # rotation angle in the (mean axis, spare axis) plane giving that chord
    angle = 2.0 * np.arcsin(chord / spec.separation) if rotate else 0.0
    for pair in range(spec.classes // 2):
        axis = frame[:, 2 * pair]
        spare = frame[:, 2 * pair + 1]
        moved = np.cos(angle) * axis + np.sin(angle) * spare
        src_means[2 * pair] = radius * axis
        src_means[2 * pair + 1] = -radius * axis
        tgt_means[2 * pair] = radius * moved
        tgt_means[2 * pair + 1] = -radius * moved
    if spec.kind in ("marginal", "mixed"):
        tgt_means = tgt_means + offset

    def sample(means: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        blocks = []
        labels = []
        for c in range(spec.classes):
            noise = spec.noise * rng.standard_normal((spec.n_per_class, spec.dim))
            blocks.append(means[c] + noise)
            labels.extend([c + 1] * spec.n_per_class)
        return np.vstack(blocks), np.array(labels, dtype=np.int64)

    xs, ys = sample(src_means)
    xt, yt = sample(tgt_means)
    return DomainPair(
        FeatureMatrix(xs, ys),
        FeatureMatrix(xt, yt),
        class_count=spec.classes,
    )
