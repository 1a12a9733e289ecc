"""Analytic reference targets used for testing samplers and integrators."""

from __future__ import annotations

import math

import numpy as np

from .base import TargetModel


class GaussianTarget(TargetModel):
    """Multivariate normal N(mean, cov), parameterized by its precision."""

    def __init__(self, mean=None, cov=None, *, dim=None):
        if mean is None and cov is None and dim is None:
            raise ValueError("need mean, cov or dim")
        if dim is None:
            dim = len(mean) if mean is not None else np.shape(cov)[0]
        self.dim = int(dim)
        self.mean = np.zeros(self.dim) if mean is None else np.asarray(mean, dtype=float)
        self.cov = np.eye(self.dim) if cov is None else np.atleast_2d(np.asarray(cov, dtype=float))
        self.precision = np.linalg.inv(self.cov)
        sign, logdet = np.linalg.slogdet(self.cov)
        if sign <= 0:
            raise ValueError("covariance must be positive definite")
        self._log_norm = 0.5 * (self.dim * math.log(2 * math.pi) + logdet)

    def neg_log_posterior(self, w):
        d = np.asarray(w, dtype=float) - self.mean
        return 0.5 * float(d @ self.precision @ d) + self._log_norm

    def grad(self, w):
        return self.precision @ (np.asarray(w, dtype=float) - self.mean)

    def hessian(self, w):
        return self.precision.copy()


class BananaTarget(TargetModel):
    """Curved 2-D Gaussian: x1 ~ N(0, 1), x2 | x1 ~ N(b (x1^2 - 1), s^2).

    Its Hessian is indefinite away from the spine, which makes it a useful
    stress test for the SoftAbs metric.
    """

    dim = 2

    def __init__(self, curvature=1.0, scale=0.5):
        self.b = float(curvature)
        self.s = float(scale)

    def _resid(self, w):
        return (w[1] - self.b * (w[0] ** 2 - 1.0)) / self.s

    def neg_log_posterior(self, w):
        w = np.asarray(w, dtype=float)
        r = self._resid(w)
        return 0.5 * w[0] ** 2 + 0.5 * r ** 2

    def grad(self, w):
        w = np.asarray(w, dtype=float)
        r = self._resid(w)
        dr0 = -2.0 * self.b * w[0] / self.s
        dr1 = 1.0 / self.s
        return np.array([w[0] + r * dr0, r * dr1])

    def hessian(self, w):
        w = np.asarray(w, dtype=float)
        r = self._resid(w)
        dr0 = -2.0 * self.b * w[0] / self.s
        dr1 = 1.0 / self.s
        d2r00 = -2.0 * self.b / self.s
        h00 = 1.0 + dr0 ** 2 + r * d2r00
        h01 = dr0 * dr1
        h11 = dr1 ** 2
        return np.array([[h00, h01], [h01, h11]])
