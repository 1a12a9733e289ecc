"""Merton jump-diffusion posterior over log returns.

Parameters live on the unconstrained vector
``(mu, log_sigma, log_lambda, mu_jump, log_sigma_jump)``; the Gaussian prior is
placed on that vector directly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, pdtrc

from .base import TargetModel, central_difference_jacobian

PARAM_NAMES = ("mu", "log_sigma", "log_lambda", "mu_jump", "log_sigma_jump")
DRIFT_CONVENTIONS = ("ito", "raw")

TAIL_TOLERANCE = 1e-12
N_MAX_BOUNDS = (10, 100)

_LOG_2PI = math.log(2.0 * math.pi)


class TruncationWarning(UserWarning):
    """The Poisson mixture was cut off before its tail fell below tolerance."""


@dataclass(frozen=True)
class ReturnSeries:
    r: np.ndarray
    tau: float = 1.0

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float).reshape(-1)
        if not np.all(np.isfinite(r)):
            raise ValueError("returns must be finite")
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        object.__setattr__(self, "r", r)

    def __len__(self):
        return self.r.size


def truncation_order(lam_tau: float, tol=TAIL_TOLERANCE, bounds=N_MAX_BOUNDS):
    """Smallest n with P(Poisson(lam_tau) > n) < tol, clamped to ``bounds``.

    Returns ``(n_max, ok)``; ``ok`` is False when the upper clamp left more
    than ``tol`` of the Poisson mass outside the mixture.
    """
    lo, hi = bounds
    if not lam_tau > 0.0:
        return lo, True
    ns = np.arange(lo, hi + 1)
    tails = pdtrc(ns, lam_tau)
    below = np.nonzero(tails < tol)[0]
    if below.size == 0:
        return hi, False
    return int(ns[below[0]]), True


def _unpack(theta):
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (5,):
        raise ValueError(f"jump-diffusion parameter vector must have shape (5,), got {theta.shape}")
    return theta


def _resolve_n_max(theta, tau, n_max):
    if n_max is not None:
        return int(n_max)
    with np.errstate(over="ignore"):
        lam_tau = math.exp(min(theta[2], 700.0)) * tau
    n, ok = truncation_order(lam_tau)
    if not ok:
        # fixed text so the default filter reports it once per call site
        warnings.warn(
            f"Poisson mixture truncated at n={n}: lambda*tau too large to keep "
            f"1 - {TAIL_TOLERANCE:g} of the Poisson mass",
            TruncationWarning,
            stacklevel=3,
        )
    return n


def _components(theta, tau, n_max, drift):
    """Per-component log weights, means and variances of the truncated mixture."""
    if drift not in DRIFT_CONVENTIONS:
        raise ValueError(f"drift convention must be one of {DRIFT_CONVENTIONS}, got {drift!r}")
    mu, log_sigma, log_lam, mu_j, log_sigma_j = theta
    n = np.arange(n_max + 1, dtype=float)
    sigma2 = float(np.exp(2.0 * log_sigma))
    sigma_j2 = float(np.exp(2.0 * log_sigma_j))
    lam_tau = float(np.exp(log_lam)) * tau
    ito = 1.0 if drift == "ito" else 0.0
    log_weight = -lam_tau + n * (log_lam + math.log(tau)) - gammaln(n + 1.0)
    var = sigma2 * tau + n * sigma_j2
    mean = (mu - ito * 0.5 * sigma2) * tau + n * mu_j
    return n, log_weight, mean, var, sigma2, sigma_j2, lam_tau, ito


def _log_terms(r, log_weight, mean, var):
    # (K, N) array of log(weight_n * normal_pdf(r_t; mean_n, var_n)); component-major
    # so the reductions over components run across rows, which numpy does fast
    err = r[None, :] - mean[:, None]
    offset = log_weight - 0.5 * (_LOG_2PI + np.log(var))
    return offset[:, None] - (0.5 / var)[:, None] * err * err


def _col_logsumexp(a):
    amax = np.max(a, axis=0)
    amax[~np.isfinite(amax)] = 0.0
    e = np.exp(a - amax)
    s = np.sum(e, axis=0)
    return np.log(s) + amax, e, s


def jd_transition_log_density(r, params, tau=1.0, n_max=None, drift="ito"):
    """Log transition density of one log return, truncated at ``n_max`` jumps.

    ``r`` may be a scalar or an array of returns.
    """
    theta = _unpack(params)
    n_max = _resolve_n_max(theta, tau, n_max)
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        _, log_weight, mean, var = _components(theta, tau, n_max, drift)[:4]
        out = _col_logsumexp(_log_terms(r_arr, log_weight, mean, var))[0]
    return float(out[0]) if np.ndim(r) == 0 else out


def _prior_precision(prior_scale):
    return 0.0 if np.isinf(prior_scale) else 1.0 / prior_scale ** 2


def _power_basis(series):
    # cached [1, r, r^2] columns so component moments come from a single matmul
    basis = getattr(series, "_basis", None)
    if basis is None:
        r = series.r
        basis = np.stack([np.ones_like(r), r, r * r], axis=1)
        object.__setattr__(series, "_basis", basis)
    return basis


def _value_and_grad(theta, series, prior_scale, n_max, drift, need_grad=True):
    theta = _unpack(theta)
    prec = _prior_precision(prior_scale)
    value = 0.5 * prec * float(theta @ theta)
    grad = prec * theta
    if len(series) == 0:
        return value, grad
    tau = series.tau
    n_max = _resolve_n_max(theta, tau, n_max)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        n, log_weight, mean, var, sigma2, sigma_j2, lam_tau, ito = _components(
            theta, tau, n_max, drift
        )
        a = _log_terms(series.r, log_weight, mean, var)
        lse, e, s = _col_logsumexp(a)
        value -= float(np.sum(lse))
        if not math.isfinite(value):
            return math.inf, np.full(5, np.nan)
        if not need_grad:
            return value, None
        resp = e / s
        # moments of the responsibilities: sum_t resp * (1, r, r^2)
        m0, m1, m2 = (resp @ _power_basis(series)).T
        s_err = m1 - mean * m0
        s_err2 = m2 - 2.0 * mean * m1 + mean * mean * m0
        d_mean = s_err / var
        d_var = 0.5 * (s_err2 / var ** 2 - m0 / var)
        sum_d_mean = np.sum(d_mean)
        g = np.array(
            [
                tau * sum_d_mean,
                np.sum(d_var) * 2.0 * sigma2 * tau - ito * sigma2 * tau * sum_d_mean,
                np.sum(m0 * (n - lam_tau)),
                np.dot(d_mean, n),
                np.dot(d_var, n) * 2.0 * sigma_j2,
            ]
        )
    return value, grad - g


def jd_neg_log_posterior(theta, series: ReturnSeries, prior_scale=1.0, n_max=None, drift="ito"):
    return _value_and_grad(theta, series, prior_scale, n_max, drift, need_grad=False)[0]


def jd_grad(theta, series: ReturnSeries, prior_scale=1.0, n_max=None, drift="ito"):
    """Analytic gradient via per-component responsibilities."""
    return _value_and_grad(theta, series, prior_scale, n_max, drift)[1]


def jd_hessian(theta, series: ReturnSeries, prior_scale=1.0, n_max=None, drift="ito"):
    """Symmetrized central-difference Jacobian of :func:`jd_grad`."""
    theta = _unpack(theta)
    H = central_difference_jacobian(
        lambda t: jd_grad(t, series, prior_scale, n_max, drift), theta
    )
    return 0.5 * (H + H.T)


class JumpDiffusion(TargetModel):
    dim = 5

    def __init__(self, series: ReturnSeries, prior_scale=1.0, drift="ito", n_max=None):
        if drift not in DRIFT_CONVENTIONS:
            raise ValueError(f"drift convention must be one of {DRIFT_CONVENTIONS}, got {drift!r}")
        self.series = series
        self.prior_scale = float(prior_scale)
        self.drift = drift
        self.n_max = n_max

    def neg_log_posterior(self, w):
        return jd_neg_log_posterior(w, self.series, self.prior_scale, self.n_max, self.drift)

    def grad(self, w):
        return jd_grad(w, self.series, self.prior_scale, self.n_max, self.drift)

    def hessian(self, w):
        return jd_hessian(w, self.series, self.prior_scale, self.n_max, self.drift)
