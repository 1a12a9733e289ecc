"""Antithetic Hamiltonian Monte Carlo samplers with HMC, QIHMC and RMHMC kernels."""

from .core import MassMatrix, PhasePoint, hamiltonian, kinetic_energy
from .diagnostics import (
    antithetic_mess,
    cross_correlations,
    max_cross_correlation,
    multivariate_ess,
    normalized_ess,
)
from .integrators import (
    FixedPointConfig,
    LeapfrogConfig,
    RiemannianHamiltonian,
    generalized_leapfrog,
    leapfrog,
)
from .samplers import (
    ALL_ALGORITHMS,
    SamplerConfig,
    adapt_then_sample,
    antithetic_run,
    hmc_run,
    qihmc_run,
    rmhmc_run,
)

__version__ = "0.1.0"

__all__ = [
    "MassMatrix",
    "PhasePoint",
    "hamiltonian",
    "kinetic_energy",
    "antithetic_mess",
    "cross_correlations",
    "max_cross_correlation",
    "multivariate_ess",
    "normalized_ess",
    "FixedPointConfig",
    "LeapfrogConfig",
    "RiemannianHamiltonian",
    "generalized_leapfrog",
    "leapfrog",
    "ALL_ALGORITHMS",
    "SamplerConfig",
    "adapt_then_sample",
    "antithetic_run",
    "hmc_run",
    "qihmc_run",
    "rmhmc_run",
]
