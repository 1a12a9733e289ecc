"""Effective sample size and cross-chain correlation diagnostics."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

ANTITHETIC_RHO_FLOOR = -1.0 + 1e-12


class DegenerateChainError(ValueError):
    """A chain (or one of its coordinates) carries no usable variation."""


@dataclass(frozen=True)
class EssReport:
    m_ess: float
    n: int
    d: int
    batch_size: int
    n_batches: int
    sigma_logdet: float
    lambda_logdet: float


def _as_samples(samples):
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError(f"samples must be an N x D matrix, got shape {x.shape}")
    return x


def batch_means_covariance(samples, batch_size=None):
    """Non-overlapping batch-means estimate of the long-run covariance.

    Leading rows that do not fill a whole batch are dropped. Returns
    ``(Sigma, batch_size, n_batches)``.
    """
    x = _as_samples(samples)
    n = x.shape[0]
    b = int(math.isqrt(n)) if batch_size is None else int(batch_size)
    a = n // b
    if a < 2:
        raise ValueError(f"need at least two batches, got {a} from N={n}, b={b}")
    x = x[n - a * b :]
    means = x.reshape(a, b, -1).mean(axis=1)
    centered = means - x.mean(axis=0)
    sigma = b * (centered.T @ centered) / (a - 1)
    return sigma, b, a


def multivariate_ess(samples) -> EssReport:
    """mESS = N (|Lambda| / |Sigma|)^(1/D) with batch size floor(sqrt(N)).

    Lambda is the sample covariance and Sigma the batch-means estimate of the
    Markov-chain long-run covariance; both determinants are taken in log space.
    """
    x = _as_samples(samples)
    n, d = x.shape
    b = int(math.isqrt(n))
    if n < 4 * b:
        raise ValueError(f"too few samples for batch means: N={n}")
    spread = np.ptp(x, axis=0)
    constant = np.nonzero(spread == 0.0)[0]
    if constant.size:
        raise DegenerateChainError(f"constant columns in sample matrix: {constant.tolist()}")
    lam = np.atleast_2d(np.cov(x, rowvar=False))
    sigma, b, a = batch_means_covariance(x, b)
    sign_l, logdet_l = np.linalg.slogdet(lam)
    sign_s, logdet_s = np.linalg.slogdet(sigma)
    if sign_s <= 0 or not np.isfinite(logdet_s):
        flat = np.nonzero(np.diag(sigma) <= 1e-300)[0]
        detail = (
            f"dimensions with zero batch-mean variance: {flat.tolist()}"
            if flat.size
            else f"batch-means covariance has rank {np.linalg.matrix_rank(sigma)} < {d}"
            f" ({a} batches)"
        )
        raise DegenerateChainError(f"singular batch-means covariance; {detail}")
    if sign_l <= 0:
        raise DegenerateChainError(
            f"singular sample covariance (rank {np.linalg.matrix_rank(lam)} < {d})"
        )
    m_ess = n * math.exp((logdet_l - logdet_s) / d)
    return EssReport(m_ess, n, d, b, a, float(logdet_s), float(logdet_l))


def antithetic_mess(m_ess_original: float, rho: float) -> float:
    """ESS of the averaged antithetic pair, 2 mESS / (1 + rho).

    Returns ``math.inf`` as a sentinel when rho is at (numerically) -1.
    """
    if not rho <= 1.0:
        raise ValueError(f"correlation must lie in [-1, 1], got {rho}")
    if rho <= ANTITHETIC_RHO_FLOOR:
        return math.inf
    return 2.0 * m_ess_original / (1.0 + rho)


def cross_correlations(chain_x, chain_y) -> np.ndarray:
    """Per-dimension Pearson correlation; NaN where either column is constant."""
    x = _as_samples(chain_x)
    y = _as_samples(chain_y)
    if x.shape != y.shape:
        raise ValueError(f"chain shapes differ: {x.shape} vs {y.shape}")
    xc = x - x.mean(axis=0)
    yc = y - y.mean(axis=0)
    sx = np.sqrt(np.sum(xc * xc, axis=0))
    sy = np.sqrt(np.sum(yc * yc, axis=0))
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.sum(xc * yc, axis=0) / (sx * sy)
    corr[(sx == 0.0) | (sy == 0.0)] = np.nan
    return np.clip(corr, -1.0, 1.0)


def max_cross_correlation(chain_x, chain_y) -> float:
    """Largest (signed) per-dimension correlation between two chains."""
    corr = cross_correlations(chain_x, chain_y)
    skipped = np.nonzero(np.isnan(corr))[0]
    if skipped.size == corr.size:
        raise DegenerateChainError("every dimension is constant in at least one chain")
    if skipped.size:
        warnings.warn(f"skipping constant dimensions {skipped.tolist()} in correlation", RuntimeWarning)
    return float(np.nanmax(corr))


def normalized_ess(m_ess: float, seconds: float) -> float:
    if not seconds > 0:
        raise ValueError(f"execution time must be positive, got {seconds}")
    return m_ess / seconds
