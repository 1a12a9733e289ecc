"""Symplectic integrators.

``leapfrog`` handles the separable Hamiltonian with a fixed mass matrix.
``generalized_leapfrog`` handles the Riemannian Hamiltonian, whose kinetic
term depends on position, with Picard fixed-point iterations for the two
implicit sub-steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import LOG_2PI, PhasePoint, as_mass
from .models.softabs import DEFAULT_SOFTABS_ALPHA, SoftAbsMetric, softabs_metric

MAX_STEPS = 10**6


@dataclass(frozen=True)
class LeapfrogConfig:
    step_size: float
    n_steps: int

    def __post_init__(self):
        if not (math.isfinite(self.step_size) and self.step_size > 0):
            raise ValueError(f"step size must be finite and positive, got {self.step_size}")
        if not 0 <= self.n_steps <= MAX_STEPS:
            raise ValueError(f"n_steps must lie in [0, {MAX_STEPS}], got {self.n_steps}")


@dataclass(frozen=True)
class FixedPointConfig:
    tolerance: float = 1e-6
    max_iterations: int = 10

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("fixed-point tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("fixed-point max_iterations must be at least 1")


@dataclass
class FixedPointStats:
    """Counts accumulated over the implicit sub-steps of a trajectory."""

    solves: int = 0
    iterations: int = 0
    unconverged: int = 0

    def record(self, iterations, converged):
        self.solves += 1
        self.iterations += iterations
        if not converged:
            self.unconverged += 1


def leapfrog(model, x: PhasePoint, M, cfg: LeapfrogConfig) -> PhasePoint:
    """Run ``cfg.n_steps`` kick-drift-kick steps and return ``(w, -p)``.

    Negating the final momentum makes the map an involution. If a gradient
    goes non-finite the trajectory stops there and the non-finite state is
    returned; the caller's energy check then rejects it.
    """
    M = as_mass(M)
    w = np.array(x.position, dtype=float)
    p = np.array(x.momentum, dtype=float)
    eps = cfg.step_size
    half = 0.5 * eps
    if cfg.n_steps == 0:
        return PhasePoint(w, -p)
    g = model.grad(w)
    for _ in range(cfg.n_steps):
        p = p - half * g
        w = w + eps * M.inv_dot(p)
        g = model.grad(w)
        p = p - half * g
        if not np.all(np.isfinite(g)):
            p = np.full_like(p, np.nan)
            break
    return PhasePoint(w, -p)


def _key(w):
    return np.asarray(w, dtype=float).tobytes()


class RiemannianHamiltonian:
    """H(w, p) = U(w) + 0.5 log((2 pi)^D |G(w)|) + 0.5 p^T G(w)^{-1} p.

    ``G`` is the SoftAbs transform of ``metric_source(w)``, which defaults to
    the model Hessian. The metric and its coordinate derivatives are cached
    for the most recently visited positions.
    """

    def __init__(self, model, alpha=DEFAULT_SOFTABS_ALPHA, metric_source=None, cache_size=4):
        self.model = model
        self.alpha = float(alpha)
        self.metric_source = metric_source if metric_source is not None else model.hessian
        self._metric_cache: dict[bytes, SoftAbsMetric] = {}
        self._deriv_cache: dict[bytes, np.ndarray] = {}
        self._cache_size = cache_size

    @property
    def dim(self):
        return self.model.dim

    def _remember(self, cache, key, value):
        if len(cache) >= self._cache_size:
            cache.pop(next(iter(cache)))
        cache[key] = value

    def metric(self, w) -> SoftAbsMetric:
        key = _key(w)
        hit = self._metric_cache.get(key)
        if hit is None:
            hit = softabs_metric(self.metric_source(np.asarray(w, dtype=float)), self.alpha)
            self._remember(self._metric_cache, key, hit)
        return hit

    def metric_derivatives(self, w) -> np.ndarray:
        """dG/dw_i by central differences, shape (D, D, D) indexed [i, j, k]."""
        key = _key(w)
        hit = self._deriv_cache.get(key)
        if hit is None:
            w = np.asarray(w, dtype=float)
            d = w.size
            hit = np.empty((d, d, d))
            for i in range(d):
                h = 1e-5 * max(1.0, abs(w[i]))
                up = w.copy()
                dn = w.copy()
                up[i] += h
                dn[i] -= h
                g_up = softabs_metric(self.metric_source(up), self.alpha).G
                g_dn = softabs_metric(self.metric_source(dn), self.alpha).G
                hit[i] = (g_up - g_dn) / (2.0 * h)
            self._remember(self._deriv_cache, key, hit)
        return hit

    def energy(self, w, p) -> float:
        met = self.metric(w)
        p = np.asarray(p, dtype=float)
        u = self.model.neg_log_posterior(w)
        return u + 0.5 * (self.dim * LOG_2PI + met.logdet) + 0.5 * float(p @ met.G_inverse @ p)

    def potential_part_grad(self, w) -> np.ndarray:
        """Momentum-independent part of dH/dw: grad U + 0.5 tr(G^{-1} dG_i)."""
        met = self.metric(w)
        dG = self.metric_derivatives(w)
        return self.model.grad(w) + 0.5 * np.einsum("jk,ikj->i", met.G_inverse, dG)

    def quad_part_grad(self, w, p) -> np.ndarray:
        """Momentum-dependent part of dH/dw: -0.5 p^T G^{-1} dG_i G^{-1} p."""
        v = self.metric(w).G_inverse @ p
        return -0.5 * np.einsum("j,ijk,k->i", v, self.metric_derivatives(w), v)

    def dH_dp(self, w, p) -> np.ndarray:
        return self.metric(w).G_inverse @ p


def riemannian_hamiltonian_grads(rh: RiemannianHamiltonian, x: PhasePoint):
    """Return ``(dH_dw, dH_dp)`` at the phase point ``x``."""
    w, p = x
    p = np.asarray(p, dtype=float)
    dH_dw = rh.potential_part_grad(w) + rh.quad_part_grad(w, p)
    return dH_dw, rh.dH_dp(w, p)


def _max_abs_diff(a, b):
    return float(np.max(np.abs(a - b)))


def generalized_leapfrog(
    rh: RiemannianHamiltonian,
    x: PhasePoint,
    cfg: LeapfrogConfig,
    fp: FixedPointConfig = FixedPointConfig(),
    stats: FixedPointStats | None = None,
) -> PhasePoint:
    """Implicit generalized leapfrog; returns ``(w, -p)``.

    Each step solves the implicit half-kick for momentum, then the implicit
    position update, both by plain fixed-point iteration stopped when the
    max-abs change is within ``fp.tolerance`` or after ``fp.max_iterations``;
    a final explicit half-kick completes the step. Non-convergence is recorded
    in ``stats`` rather than raised.
    """
    if stats is None:
        stats = FixedPointStats()
    w = np.array(x.position, dtype=float)
    p = np.array(x.momentum, dtype=float)
    eps = cfg.step_size
    half = 0.5 * eps
    tol = fp.tolerance
    try:
        for _ in range(cfg.n_steps):
            # implicit half-kick: p* = p - eps/2 * dH/dw(w, p*)
            fixed = rh.potential_part_grad(w)
            p0 = p
            converged = False
            for it in range(1, fp.max_iterations + 1):
                p_new = p0 - half * (fixed + rh.quad_part_grad(w, p))
                delta = _max_abs_diff(p, p_new)
                p = p_new
                if not delta > tol:
                    converged = delta <= tol
                    break
            stats.record(it, converged)
            if not np.all(np.isfinite(p)):
                raise FloatingPointError("non-finite momentum")

            # implicit drift: w* = w0 + eps/2 * (G(w0)^-1 p + G(w*)^-1 p)
            w0 = w
            v0 = rh.dH_dp(w0, p)
            w = w0 + eps * v0
            converged = False
            for it in range(1, fp.max_iterations + 1):
                w_new = w0 + half * v0 + half * rh.dH_dp(w, p)
                delta = _max_abs_diff(w, w_new)
                w = w_new
                if not delta > tol:
                    converged = delta <= tol
                    break
            stats.record(it, converged)
            if not np.all(np.isfinite(w)):
                raise FloatingPointError("non-finite position")

            # explicit half-kick at the new position
            dH_dw = rh.potential_part_grad(w) + rh.quad_part_grad(w, p)
            p = p - half * dH_dw
            if not np.all(np.isfinite(p)):
                raise FloatingPointError("non-finite momentum")
    except (np.linalg.LinAlgError, FloatingPointError):
        nan = np.full_like(p, np.nan)
        return PhasePoint(np.full_like(w, np.nan), nan)
    return PhasePoint(w, -p)
