"""Manifold dynamic distribution adaptation for unsupervised domain transfer."""

from .data import (
    DomainPair,
    FeatureMatrix,
    ShiftSpec,
    load_features,
    make_shift_dataset,
    upsample,
    write_features,
)
from .divergence import (
    EstimateMu,
    FixedMu,
    GridAverageMu,
    MuEstimate,
    RandomAverageMu,
    a_distance,
    combine_mmd_matrices,
    conditional_mmd_matrix,
    estimate_mu,
    marginal_mmd_matrix,
    mmd_biased,
    mmd_linear,
    mu_schedule,
)
from .exceptions import ConfigError, DataError, NumericError
from .graph import AffinityGraph, build_graph
from .kernel import KernelSpec, default_bandwidth, gram
from .manifold import GeodesicKernel, Subspace, gfk, l2_normalize_rows, pca_basis, transform
from .pipeline import (
    AdaptationReport,
    EvaluationResult,
    IterationRecord,
    MddaConfig,
    evaluate,
    fit,
)
from .srm import (
    FittedModel,
    accuracy,
    build_labels,
    load_model,
    predict,
    predict_raw,
    predict_scores,
    save_model,
    solve_beta,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptationReport",
    "AffinityGraph",
    "ConfigError",
    "DataError",
    "DomainPair",
    "EstimateMu",
    "EvaluationResult",
    "FeatureMatrix",
    "FittedModel",
    "FixedMu",
    "GeodesicKernel",
    "GridAverageMu",
    "IterationRecord",
    "KernelSpec",
    "MddaConfig",
    "MuEstimate",
    "NumericError",
    "RandomAverageMu",
    "ShiftSpec",
    "Subspace",
    "a_distance",
    "accuracy",
    "build_graph",
    "build_labels",
    "combine_mmd_matrices",
    "conditional_mmd_matrix",
    "default_bandwidth",
    "estimate_mu",
    "evaluate",
    "fit",
    "gfk",
    "gram",
    "l2_normalize_rows",
    "load_features",
    "load_model",
    "make_shift_dataset",
    "marginal_mmd_matrix",
    "mmd_biased",
    "mmd_linear",
    "mu_schedule",
    "pca_basis",
    "predict",
    "predict_raw",
    "predict_scores",
    "save_model",
    "solve_beta",
    "transform",
    "upsample",
    "write_features",
]
