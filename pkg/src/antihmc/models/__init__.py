"""Target posteriors and the SoftAbs metric transform."""

from .base import TargetModel, central_difference_jacobian
from .jump_diffusion import (
    PARAM_NAMES as JD_PARAM_NAMES,
    JumpDiffusion,
    ReturnSeries,
    TruncationWarning,
    jd_grad,
    jd_hessian,
    jd_neg_log_posterior,
    jd_transition_log_density,
    truncation_order,
)
from .logistic import (
    ClassificationData,
    LogisticRegression,
    blr_grad,
    blr_hessian,
    blr_neg_log_posterior,
)
from .reference import BananaTarget, GaussianTarget
from .softabs import DEFAULT_SOFTABS_ALPHA, SoftAbsMetric, softabs_eigenvalues, softabs_metric

__all__ = [
    "TargetModel",
    "central_difference_jacobian",
    "JD_PARAM_NAMES",
    "JumpDiffusion",
    "ReturnSeries",
    "TruncationWarning",
    "jd_grad",
    "jd_hessian",
    "jd_neg_log_posterior",
    "jd_transition_log_density",
    "truncation_order",
    "ClassificationData",
    "LogisticRegression",
    "blr_grad",
    "blr_hessian",
    "blr_neg_log_posterior",
    "BananaTarget",
    "GaussianTarget",
    "DEFAULT_SOFTABS_ALPHA",
    "SoftAbsMetric",
    "softabs_eigenvalues",
    "softabs_metric",
]
