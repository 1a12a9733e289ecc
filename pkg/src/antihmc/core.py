"""Energy bookkeeping, momentum draws and the Metropolis test."""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from scipy import linalg

LOG_2PI = math.log(2.0 * math.pi)


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """Raised when a mass matrix or metric fails its Cholesky factorization."""


class PhasePoint(NamedTuple):
    position: np.ndarray
    momentum: np.ndarray


class MassMatrix:
    """A realized symmetric positive-definite mass matrix.

    Diagonal matrices are stored as their diagonal; dense ones carry a lower
    Cholesky factor computed once at construction.
    """

    def __init__(self, matrix=None, *, diagonal=None, name="mass matrix"):
        if (matrix is None) == (diagonal is None):
            raise ValueError("give exactly one of matrix or diagonal")
        self.name = name
        if diagonal is not None:
            diag = np.asarray(diagonal, dtype=float)
            if diag.ndim != 1:
                raise ValueError(f"{name}: diagonal must be one-dimensional")
            if not np.all(np.isfinite(diag)) or np.any(diag <= 0.0):
                raise NotPositiveDefiniteError(
                    f"{name} is not positive definite: diagonal has non-positive "
                    "or non-finite entries"
                )
            self.diagonal = diag
            self.matrix = None
            self.chol = np.sqrt(diag)
            self.log_det = float(np.sum(np.log(diag)))
        else:
            mat = np.asarray(matrix, dtype=float)
            if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
                raise ValueError(f"{name} must be square, got shape {mat.shape}")
            if not np.all(np.isfinite(mat)):
                raise NotPositiveDefiniteError(f"{name} has non-finite entries")
            try:
                chol = linalg.cholesky(mat, lower=True, check_finite=False)
            except linalg.LinAlgError as exc:
                raise NotPositiveDefiniteError(
                    f"{name} is not positive definite (Cholesky failed)"
                ) from exc
            self.diagonal = None
            self.matrix = mat
            self.chol = chol
            self.log_det = float(2.0 * np.sum(np.log(np.diag(chol))))

    @classmethod
    def identity(cls, dim: int) -> MassMatrix:
        return cls(diagonal=np.ones(dim), name="identity mass matrix")

    @property
    def dim(self) -> int:
        return self.chol.shape[0]

    @property
    def is_diagonal(self) -> bool:
        return self.diagonal is not None

    def dense(self) -> np.ndarray:
        if self.is_diagonal:
            return np.diag(self.diagonal)
        return self.matrix

    def inv_dot(self, p: np.ndarray) -> np.ndarray:
        """Return M^{-1} p."""
        if self.is_diagonal:
            return p / self.diagonal
        return linalg.cho_solve((self.chol, True), p, check_finite=False)

    def chol_dot(self, z: np.ndarray) -> np.ndarray:
        """Return L z with M = L L^T."""
        if self.is_diagonal:
            return self.chol * z
        return self.chol @ z


def as_mass(M) -> MassMatrix:
    if isinstance(M, MassMatrix):
        return M
    return MassMatrix(np.atleast_2d(np.asarray(M, dtype=float)))


def kinetic_energy(p, M) -> float:
    """Gaussian kinetic energy including the log-normalizer.

    K(p) = 0.5 * log((2 pi)^D |M|) + 0.5 * p^T M^{-1} p
    """
    M = as_mass(M)
    p = np.asarray(p, dtype=float)
    quad = float(p @ M.inv_dot(p))
    return 0.5 * (M.dim * LOG_2PI + M.log_det) + 0.5 * quad


def kinetic_grad(p, M) -> np.ndarray:
    """Gradient of the kinetic energy with respect to momentum, M^{-1} p."""
    return as_mass(M).inv_dot(np.asarray(p, dtype=float))


def hamiltonian(model, x: PhasePoint, M) -> float:
    w, p = x
    if np.shape(w) != np.shape(p):
        raise ValueError(f"position shape {np.shape(w)} != momentum shape {np.shape(p)}")
    return model.neg_log_posterior(w) + kinetic_energy(p, M)


def sample_momentum(M, rng: np.random.Generator) -> np.ndarray:
    """Draw p ~ N(0, M).

    Consumes exactly ``D`` standard normals from ``rng``, in index order, and
    maps them through the Cholesky factor. Antithetic pairs rely on this to
    reproduce and negate draws bit for bit.
    """
    M = as_mass(M)
    z = rng.standard_normal(M.dim)
    return M.chol_dot(z)


def metropolis(alpha: float, u: float, proposed, current):
    """Reject iff alpha < u; ties keep the proposal."""
    if alpha < u:
        return current
    return proposed


def acceptance_probability(delta_h: float) -> float:
    """min(1, exp(delta_h)), with delta_h = H(old) - H(new)."""
    if not math.isfinite(delta_h):
        return 1.0 if delta_h > 0 else 0.0
    if delta_h >= 0.0:
        return 1.0
    return math.exp(delta_h)
