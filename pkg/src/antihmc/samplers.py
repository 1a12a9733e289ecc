"""HMC, QIHMC and RMHMC samplers, their antithetic pairs, and step-size adaptation.

All six algorithms share one driver. An antithetic run advances two chains
per iteration: the y-chain reuses the x-chain's momentum with its sign
flipped, the same mass-matrix draw (QIHMC) and the same Metropolis uniform.
Random draws come from named streams, so the x-chain of a coupled run is
bit-identical to a solo run with the same seed.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .core import MassMatrix, PhasePoint, acceptance_probability, hamiltonian, sample_momentum
from .diagnostics import cross_correlations
from .integrators import (
    FixedPointConfig,
    FixedPointStats,
    LeapfrogConfig,
    RiemannianHamiltonian,
    generalized_leapfrog,
    leapfrog,
)
from .models.softabs import DEFAULT_SOFTABS_ALPHA
from .rng import Streams

ALGORITHMS = ("hmc", "qihmc", "rmhmc")
ANTITHETIC = {"a-hmc": "hmc", "a-qihmc": "qihmc", "a-rmhmc": "rmhmc"}
ALL_ALGORITHMS = ALGORITHMS + tuple(ANTITHETIC)

DIVERGENCE_THRESHOLD = 1000.0


@dataclass(frozen=True)
class SamplerConfig:
    n_samples: int
    n_burnin: int = 0
    step_size: float = 0.1
    trajectory_length: int = 200
    adapt_target: float = 0.8
    adapt_during_burnin: bool = True
    mass: np.ndarray | None = None  # fixed HMC mass; 1-D means diagonal
    qihmc_log_scale: float = 1.0  # std of the normal underlying the log-normal masses
    softabs_alpha: float = DEFAULT_SOFTABS_ALPHA
    fixed_point: FixedPointConfig = field(default_factory=FixedPointConfig)
    init_scale: float = 0.1
    seed: int | np.random.SeedSequence = 0

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be at least 1")
        if self.n_burnin < 0:
            raise ValueError("n_burnin must be non-negative")
        if not (self.step_size > 0 and math.isfinite(self.step_size)):
            raise ValueError("step_size must be positive and finite")
        if self.trajectory_length < 1:
            raise ValueError("trajectory_length must be at least 1")
        if not 0.0 < self.adapt_target < 1.0:
            raise ValueError("adapt_target must lie in (0, 1)")
        if self.qihmc_log_scale < 0:
            raise ValueError("qihmc_log_scale must be non-negative")


@dataclass(frozen=True)
class DualAveragingState:
    """Step-size adaptation state; ``m`` counts completed updates."""

    mu: float
    target: float = 0.8
    log_eps_bar: float = 0.0
    h_bar: float = 0.0
    m: int = 0
    gamma: float = 0.05
    t0: float = 10.0
    kappa: float = 0.75

    @classmethod
    def start(cls, step_size: float, target: float = 0.8) -> DualAveragingState:
        return cls(mu=math.log(10.0 * step_size), target=target)

    @property
    def final_step_size(self) -> float:
        return math.exp(self.log_eps_bar)


def dual_averaging_step(state: DualAveragingState, alpha_m: float):
    """One adaptation update; returns ``(new_state, epsilon_m)``."""
    m = state.m + 1
    w = 1.0 / (m + state.t0)
    h_bar = (1.0 - w) * state.h_bar + w * (state.target - alpha_m)
    log_eps = state.mu - math.sqrt(m) / state.gamma * h_bar
    decay = m ** (-state.kappa)
    log_eps_bar = decay * log_eps + (1.0 - decay) * state.log_eps_bar
    new = replace(state, h_bar=h_bar, log_eps_bar=log_eps_bar, m=m)
    return new, math.exp(log_eps)


@dataclass
class ChainOutput:
    samples: np.ndarray
    acceptance_rate: float
    delta_h: np.ndarray
    accept_prob: np.ndarray
    divergences: int
    seconds: float
    step_size: float
    burnin_accept_prob: np.ndarray
    burnin_accepted: np.ndarray
    burnin_divergences: int = 0
    fixed_point: FixedPointStats | None = None

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]


@dataclass
class CoupledOutput:
    chain_x: ChainOutput
    chain_y: ChainOutput
    correlations: np.ndarray
    rho: float
    seconds: float


@dataclass
class _Proposal:
    position: np.ndarray
    delta_h: float
    alpha: float
    divergent: bool


class _HMCKernel:
    def __init__(self, model, cfg: SamplerConfig):
        self.model = model
        self.cfg = cfg
        if cfg.mass is None:
            self.mass = MassMatrix.identity(model.dim)
        else:
            mass = np.asarray(cfg.mass, dtype=float)
            self.mass = MassMatrix(diagonal=mass) if mass.ndim == 1 else MassMatrix(mass)
            if self.mass.dim != model.dim:
                raise ValueError(f"mass matrix dimension {self.mass.dim} != model dimension {model.dim}")
        self.fp_stats = None

    def draw_mass(self, streams):
        return self.mass

    def momentum_mass(self, w, mass):
        return mass

    def energy(self, w, p, mass):
        return hamiltonian(self.model, PhasePoint(w, p), mass)

    def propose(self, w, p, mass, eps):
        return leapfrog(self.model, PhasePoint(w, p), mass, LeapfrogConfig(eps, self.cfg.trajectory_length))


class _QIHMCKernel(_HMCKernel):
    def draw_mass(self, streams):
        # diag(exp(z)), z ~ N(0, s^2); always D draws so streams stay aligned
        z = streams.mass.standard_normal(self.model.dim) * self.cfg.qihmc_log_scale
        return MassMatrix(diagonal=np.exp(z), name="sampled mass matrix")


class _RMHMCKernel:
    def __init__(self, model, cfg: SamplerConfig):
        if not model.has_hessian:
            raise ValueError(f"{type(model).__name__} has no Hessian; RMHMC needs one")
        self.model = model
        self.cfg = cfg
        self.rh = RiemannianHamiltonian(model, alpha=cfg.softabs_alpha)
        self.fp_stats = FixedPointStats()

    def draw_mass(self, streams):
        return None

    def momentum_mass(self, w, mass):
        return MassMatrix(self.rh.metric(w).G, name="SoftAbs metric")

    def energy(self, w, p, mass):
        return self.rh.energy(w, p)

    def propose(self, w, p, mass, eps):
        return generalized_leapfrog(
            self.rh,
            PhasePoint(w, p),
            LeapfrogConfig(eps, self.cfg.trajectory_length),
            self.cfg.fixed_point,
            self.fp_stats,
        )


_KERNELS = {"hmc": _HMCKernel, "qihmc": _QIHMCKernel, "rmhmc": _RMHMCKernel}


def _transition(kernel, w, p, mass, eps) -> _Proposal:
    # divergent trajectories overflow routinely; the energy check handles them
    try:
        with np.errstate(all="ignore"):
            h0 = kernel.energy(w, p, mass)
            w1, p1 = kernel.propose(w, p, mass, eps)
            if np.all(np.isfinite(w1)) and np.all(np.isfinite(p1)):
                h1 = kernel.energy(w1, p1, mass)
            else:
                h1 = math.inf
    except np.linalg.LinAlgError:
        return _Proposal(w, -math.inf, 0.0, True)
    delta_h = h0 - h1
    if not math.isfinite(delta_h) or abs(delta_h) > DIVERGENCE_THRESHOLD:
        return _Proposal(w, delta_h if not math.isnan(delta_h) else -math.inf, 0.0, True)
    return _Proposal(w1, delta_h, acceptance_probability(delta_h), False)


class _Trace:
    def __init__(self, cfg, dim, init):
        self.w = np.array(init, dtype=float)
        self.samples = np.empty((cfg.n_samples, dim))
        self.delta_h = np.empty(cfg.n_samples)
        self.accept_prob = np.empty(cfg.n_samples)
        self.accepted = np.zeros(cfg.n_samples, dtype=bool)
        self.burnin_accept_prob = np.empty(cfg.n_burnin)
        self.burnin_accepted = np.zeros(cfg.n_burnin, dtype=bool)
        self.divergences = 0
        self.burnin_divergences = 0

    def update(self, prop: _Proposal, u: float, m: int, n_burnin: int):
        # divergent proposals are never accepted, even on u == 0
        accept = (not prop.divergent) and not (prop.alpha < u)
        if accept:
            self.w = prop.position
        if m < n_burnin:
            self.burnin_accept_prob[m] = prop.alpha
            self.burnin_accepted[m] = accept
            self.burnin_divergences += prop.divergent
        else:
            k = m - n_burnin
            self.samples[k] = self.w
            self.delta_h[k] = prop.delta_h
            self.accept_prob[k] = prop.alpha
            self.accepted[k] = accept
            self.divergences += prop.divergent

    def output(self, seconds, step_size, fp_stats):
        return ChainOutput(
            samples=self.samples,
            acceptance_rate=float(np.mean(self.accepted)),
            delta_h=self.delta_h,
            accept_prob=self.accept_prob,
            divergences=int(self.divergences),
            seconds=seconds,
            step_size=step_size,
            burnin_accept_prob=self.burnin_accept_prob,
            burnin_accepted=self.burnin_accepted,
            burnin_divergences=int(self.burnin_divergences),
            fixed_point=fp_stats,
        )


def _initial_position(streams, dim, scale, given):
    # always consume the init draw so later draws do not depend on `given`
    draw = scale * streams.init.standard_normal(dim)
    return draw if given is None else np.asarray(given, dtype=float)


def _run(algorithm, model, cfg: SamplerConfig, init_x=None, init_y=None, coupled=False):
    if algorithm not in _KERNELS:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")
    kernel = _KERNELS[algorithm](model, cfg)
    streams = Streams(cfg.seed)
    dim = model.dim
    x = _Trace(cfg, dim, _initial_position(streams, dim, cfg.init_scale, init_x))
    y = _Trace(cfg, dim, _initial_position(streams, dim, cfg.init_scale, init_y)) if coupled else None

    eps = cfg.step_size
    adapt = cfg.adapt_during_burnin and cfg.n_burnin > 0
    da = DualAveragingState.start(eps, cfg.adapt_target) if adapt else None
    total = cfg.n_burnin + cfg.n_samples
    start = None
    for m in range(total):
        if m == cfg.n_burnin:
            if adapt:
                eps = da.final_step_size
            start = time.perf_counter()
        mass = kernel.draw_mass(streams)
        p = sample_momentum(kernel.momentum_mass(x.w, mass), streams.momentum)
        prop_x = _transition(kernel, x.w, p, mass, eps)
        prop_y = _transition(kernel, y.w, -p, mass, eps) if coupled else None
        u = streams.uniform.random()
        x.update(prop_x, u, m, cfg.n_burnin)
        if coupled:
            y.update(prop_y, u, m, cfg.n_burnin)
        if adapt and m < cfg.n_burnin:
            da, eps = dual_averaging_step(da, prop_x.alpha)
    seconds = time.perf_counter() - start

    out_x = x.output(seconds, eps, kernel.fp_stats)
    if not coupled:
        return out_x
    out_y = y.output(seconds, eps, kernel.fp_stats)
    corr = cross_correlations(out_x.samples, out_y.samples)
    rho = float(np.nanmax(corr)) if np.any(np.isfinite(corr)) else math.nan
    return CoupledOutput(out_x, out_y, corr, rho, seconds)


def hmc_run(model, cfg: SamplerConfig, init=None) -> ChainOutput:
    return _run("hmc", model, cfg, init)


def qihmc_run(model, cfg: SamplerConfig, init=None) -> ChainOutput:
    return _run("qihmc", model, cfg, init)


def rmhmc_run(model, cfg: SamplerConfig, init=None) -> ChainOutput:
    return _run("rmhmc", model, cfg, init)


def antithetic_run(algorithm, model, cfg: SamplerConfig, init_x=None, init_y=None) -> CoupledOutput:
    """Run an antithetic pair of ``algorithm`` chains ("hmc", "qihmc" or "rmhmc")."""
    algorithm = ANTITHETIC.get(algorithm, algorithm)
    return _run(algorithm, model, cfg, init_x, init_y, coupled=True)


def adapt_then_sample(algorithm, model, cfg: SamplerConfig, init_x=None, init_y=None):
    """Dual-averaging burn-in followed by sampling at the frozen step size.

    ``algorithm`` is one of :data:`ALL_ALGORITHMS`; the antithetic names return
    a :class:`CoupledOutput`, adapting on the x-chain only.
    """
    cfg = replace(cfg, adapt_during_burnin=True)
    if algorithm in ANTITHETIC:
        return antithetic_run(ANTITHETIC[algorithm], model, cfg, init_x, init_y)
    return _run(algorithm, model, cfg, init_x)
