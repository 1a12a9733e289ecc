"""Bayesian logistic regression with an isotropic Gaussian prior."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .base import TargetModel


@dataclass(frozen=True)
class ClassificationData:
    """Design matrix (bias column first) and 0/1 labels.

    ``feature_means`` and ``feature_scales`` record the standardization applied
    to the non-bias columns so it can be inverted.
    """

    X: np.ndarray
    y: np.ndarray
    feature_means: np.ndarray | None = None
    feature_scales: np.ndarray | None = None

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]} labels")
        if not np.all((y == 0.0) | (y == 1.0)):
            raise ValueError("labels must be 0 or 1")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]


def _prior_precision(prior_scale):
    return 0.0 if np.isinf(prior_scale) else 1.0 / prior_scale ** 2


def blr_neg_log_posterior(w, data: ClassificationData, prior_scale=1.0) -> float:
    """Bernoulli-sigmoid negative log-likelihood plus 0.5 ||w||^2 / prior_scale^2.

    Uses -log sigma(z) = log(1 + e^{-z}) through ``logaddexp`` so large |z|
    cannot overflow.
    """
    w = np.asarray(w, dtype=float)
    z = data.X @ w
    nll = float(np.sum(np.logaddexp(0.0, z) - data.y * z))
    return nll + 0.5 * _prior_precision(prior_scale) * float(w @ w)


def blr_grad(w, data: ClassificationData, prior_scale=1.0) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    resid = expit(data.X @ w) - data.y
    return data.X.T @ resid + _prior_precision(prior_scale) * w


def blr_hessian(w, data: ClassificationData, prior_scale=1.0) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    s = expit(data.X @ w)
    lam = s * (1.0 - s)
    H = (data.X.T * lam) @ data.X
    H[np.diag_indices_from(H)] += _prior_precision(prior_scale)
    return H


class LogisticRegression(TargetModel):
    def __init__(self, data: ClassificationData, prior_scale=1.0):
        self.data = data
        self.prior_scale = float(prior_scale)
        self.dim = data.dim

    def neg_log_posterior(self, w):
        return blr_neg_log_posterior(w, self.data, self.prior_scale)

    def grad(self, w):
        return blr_grad(w, self.data, self.prior_scale)

    def hessian(self, w):
        return blr_hessian(w, self.data, self.prior_scale)
