"""Target posterior interface."""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np


class TargetModel(ABC):
    """Negative log-posterior over an unconstrained parameter vector.

    Subclasses provide the value and gradient; the Hessian is only needed by
    the Riemannian sampler.
    """

    dim: int

    @abstractmethod
    def neg_log_posterior(self, w: np.ndarray) -> float:
        ...

    @abstractmethod
    def grad(self, w: np.ndarray) -> np.ndarray:
        ...

    def hessian(self, w: np.ndarray) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} does not provide a Hessian")

    @property
    def has_hessian(self) -> bool:
        return type(self).hessian is not TargetModel.hessian


def central_difference_jacobian(fun, w, rel_step=1e-5, min_step=1e-5):
    """Central-difference Jacobian of a vector function, one column per coordinate.

    Step for coordinate i is ``max(min_step, rel_step * |w_i|)``.
    """
    w = np.asarray(w, dtype=float)
    cols = []
    for i in range(w.size):
        h = max(min_step, rel_step * abs(w[i]))
        up = w.copy()
        dn = w.copy()
        up[i] += h
        dn[i] -= h
        cols.append((np.asarray(fun(up)) - np.asarray(fun(dn))) / (2.0 * h))
    return np.stack(cols, axis=-1)
