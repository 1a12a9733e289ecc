"""Independent numerical oracles shared by the test modules."""

import math

import mpmath
import numpy as np


def fd_grad(f, x, h=1e-6):
    """Central differences with a fixed absolute step."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def rel_err(a, b, floor=1e-8):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b)) / max(float(np.max(np.abs(b))), floor))


def jd_density_oracle(r, theta, tau=1.0, terms=200, ito=True):
    """Poisson mixture of normals summed term by term in 50-digit arithmetic."""
    mpmath.mp.dps = 50
    mu, log_s, log_l, mu_j, log_sj = (mpmath.mpf(float(t)) for t in theta)
    s2 = mpmath.e ** (2 * log_s)
    sj2 = mpmath.e ** (2 * log_sj)
    lt = mpmath.e ** log_l * tau
    drift = (mu - s2 / 2 if ito else mu) * tau
    r = mpmath.mpf(float(r))
    total = mpmath.mpf(0)
    for n in range(terms):
        var = s2 * tau + n * sj2
        weight = mpmath.e ** (-lt) * lt ** n / mpmath.factorial(n)
        total += weight * mpmath.e ** (-((r - drift - n * mu_j) ** 2) / (2 * var)) / mpmath.sqrt(2 * mpmath.pi * var)
    return float(total)


def logistic_nll_oracle(w, X, y):
    """Bernoulli log-loss written directly from the sigmoid, in high precision."""
    mpmath.mp.dps = 50
    total = mpmath.mpf(0)
    for xi, yi in zip(X, y):
        z = mpmath.mpf(float(np.dot(xi, w)))
        s = 1 / (1 + mpmath.e ** (-z))
        total -= mpmath.log(s) if yi == 1 else mpmath.log(1 - s)
    return float(total)


def univariate_batch_means_ess(x):
    """Textbook univariate batch-means ESS: N * var(x) / sigma^2_bm.

    The batch-means variance uses floor(sqrt(N)) sized batches over the last
    a * b draws; the sample variance uses all N draws.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    b = math.isqrt(n)
    a = n // b
    tail = x[n - a * b:]
    means = tail.reshape(a, b).mean(axis=1)
    sigma2 = b * np.sum((means - tail.mean()) ** 2) / (a - 1)
    return n * np.var(x, ddof=1) / sigma2
