"""SoftAbs regularization of a symmetric matrix."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

DEFAULT_SOFTABS_ALPHA = 1e6

_SERIES_CUTOFF = 1e-4


class SoftAbsMetric(NamedTuple):
    G: np.ndarray
    logdet: float
    G_inverse: np.ndarray
    eigenvalues: np.ndarray  # softabs-mapped
    eigenvectors: np.ndarray


def softabs_eigenvalues(lam, alpha):
    """Map eigenvalues through lam * coth(alpha * lam).

    Near zero the closed form is 0/0, so a short series around the limit
    1/alpha is used when |alpha * lam| < 1e-4.
    """
    lam = np.asarray(lam, dtype=float)
    x = alpha * lam
    small = np.abs(x) < _SERIES_CUTOFF
    out = np.empty_like(lam)
    xs = x[small]
    out[small] = (1.0 + xs ** 2 / 3.0 - xs ** 4 / 45.0) / alpha
    xl = x[~small]
    out[~small] = lam[~small] / np.tanh(xl)
    return out


def softabs_metric(H, alpha=DEFAULT_SOFTABS_ALPHA, *, name="Hessian") -> SoftAbsMetric:
    """Positive-definite surrogate of a symmetric matrix sharing its eigenvectors."""
    if alpha <= 0:
        raise ValueError(f"softabs alpha must be positive, got {alpha}")
    H = np.asarray(H, dtype=float)
    if not np.all(np.isfinite(H)):
        raise np.linalg.LinAlgError(f"{name} has non-finite entries; cannot eigendecompose")
    try:
        lam, Q = np.linalg.eigh(0.5 * (H + H.T))
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"eigendecomposition of {name} failed") from exc
    f = softabs_eigenvalues(lam, alpha)
    G = (Q * f) @ Q.T
    G_inv = (Q / f) @ Q.T
    G = 0.5 * (G + G.T)
    G_inv = 0.5 * (G_inv + G_inv.T)
    return SoftAbsMetric(G, float(np.sum(np.log(f))), G_inv, f, Q)
