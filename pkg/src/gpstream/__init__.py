"""Interpretable, uncertainty-aware online binary classification.

Full and additive Gaussian process classifiers (Laplace approximation) next
to MLP and Neural Additive baselines, a rolling-buffer online retraining
scheme with uncertainty-sampling active learning, and an experiment CLI.
"""

from .agp import (
    ContributionBreakdown,
    contribution_breakdown,
    contribution_breakdown_batch,
    fit_agp,
    top_contributor,
    top_variance_feature,
)
from .datasets import Dataset, StreamSplit, load_dataset, make_synthetic, split_stream
from .gp import (
    LaplaceState,
    LatentPrediction,
    expected_sigmoid,
    fit_laplace,
    gp_regression_posterior,
    optimize_hyperparameters,
    predict_latent,
    predict_latent_batch,
    predict_proba,
    predict_proba_batch,
)
from .kernels import (
    AdditiveKernelParams,
    SEParams,
    additive_eval,
    component_cross,
    default_additive_params,
    default_se_params,
    gram,
    prior_variance,
    se_eval,
)
from .linalg import CholeskyFactor, cholesky, log_det, solve_psd
from .metrics import RocCurve, accuracy, f1_score, importance_histogram, roc_and_auc
from .neural import (
    MLPParams,
    NAMParams,
    TrainConfig,
    init_mlp,
    init_nam,
    mlp_forward,
    nam_feature_variances,
    nam_forward,
    train,
    variance_estimate,
)
from .online import (
    OnlineConfig,
    OnlineRunResult,
    RollingBuffer,
    StepRecord,
    acquire,
    compose_window,
    run_online,
)

__all__ = [
    "AdditiveKernelParams",
    "CholeskyFactor",
    "ContributionBreakdown",
    "Dataset",
    "LaplaceState",
    "LatentPrediction",
    "MLPParams",
    "NAMParams",
    "OnlineConfig",
    "OnlineRunResult",
    "RocCurve",
    "RollingBuffer",
    "SEParams",
    "StepRecord",
    "StreamSplit",
    "TrainConfig",
    "accuracy",
    "acquire",
    "additive_eval",
    "cholesky",
    "component_cross",
    "compose_window",
    "contribution_breakdown",
    "contribution_breakdown_batch",
    "default_additive_params",
    "default_se_params",
    "expected_sigmoid",
    "f1_score",
    "fit_agp",
    "fit_laplace",
    "gp_regression_posterior",
    "gram",
    "importance_histogram",
    "init_mlp",
    "init_nam",
    "load_dataset",
    "log_det",
    "make_synthetic",
    "mlp_forward",
    "nam_feature_variances",
    "nam_forward",
    "optimize_hyperparameters",
    "predict_latent",
    "predict_latent_batch",
    "predict_proba",
    "predict_proba_batch",
    "prior_variance",
    "roc_and_auc",
    "run_online",
    "se_eval",
    "solve_psd",
    "split_stream",
    "top_contributor",
    "top_variance_feature",
    "train",
    "variance_estimate",
]
