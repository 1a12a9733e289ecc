import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from antihmc.core import (
    LOG_2PI,
    MassMatrix,
    NotPositiveDefiniteError,
    PhasePoint,
    acceptance_probability,
    hamiltonian,
    kinetic_energy,
    kinetic_grad,
    metropolis,
    sample_momentum,
)
from antihmc.models import GaussianTarget


def test_kinetic_energy_hand_value():
    # p = (1, 2), M = diag(4, 9): quadratic form 1/4 + 4/9, |M| = 36
    expected = 0.5 * (2 * math.log(2 * math.pi) + math.log(36.0)) + 0.5 * (0.25 + 4.0 / 9.0)
    assert kinetic_energy([1.0, 2.0], MassMatrix(diagonal=[4.0, 9.0])) == pytest.approx(expected, abs=1e-14)
    assert kinetic_energy([1.0, 2.0], np.diag([4.0, 9.0])) == pytest.approx(expected, abs=1e-14)


def test_kinetic_energy_at_zero_momentum_is_normalizer():
    M = np.array([[2.0, 0.5], [0.5, 1.0]])
    assert kinetic_energy(np.zeros(2), M) == pytest.approx(0.5 * (2 * LOG_2PI + math.log(1.75)))


def test_kinetic_grad_is_solve():
    M = np.array([[2.0, 0.5], [0.5, 1.0]])
    p = np.array([0.3, -1.2])
    np.testing.assert_allclose(kinetic_grad(p, M), np.linalg.solve(M, p), rtol=1e-13)


def test_hamiltonian_standard_normal_hand_value():
    model = GaussianTarget(dim=1)
    h = hamiltonian(model, PhasePoint(np.array([1.0]), np.array([2.0])), MassMatrix.identity(1))
    # U = 0.5 log 2pi + 0.5, K = 0.5 log 2pi + 2
    assert h == pytest.approx(LOG_2PI + 2.5, abs=1e-14)


def test_hamiltonian_shape_mismatch():
    with pytest.raises(ValueError):
        hamiltonian(GaussianTarget(dim=2), PhasePoint(np.zeros(2), np.zeros(3)), np.eye(2))


@pytest.mark.parametrize(
    "matrix",
    [np.array([[1.0, 2.0], [2.0, 1.0]]), np.array([[1.0, 0.0], [0.0, np.nan]]), np.diag([1.0, -1.0])],
)
def test_non_positive_definite_mass_rejected(matrix):
    with pytest.raises(NotPositiveDefiniteError, match="mass matrix"):
        MassMatrix(matrix)


def test_bad_diagonal_rejected():
    with pytest.raises(NotPositiveDefiniteError):
        MassMatrix(diagonal=[1.0, 0.0])
    with pytest.raises(ValueError):
        MassMatrix()


def test_sample_momentum_uses_d_normals_and_cholesky():
    M = np.array([[4.0, 1.0], [1.0, 2.0]])
    a = np.random.default_rng(3)
    b = np.random.default_rng(3)
    p = sample_momentum(M, a)
    z = b.standard_normal(2)
    np.testing.assert_allclose(p, np.linalg.cholesky(M) @ z, rtol=1e-13)
    # both generators are now at the same position
    assert a.random() == b.random()


def test_sample_momentum_covariance():
    M = MassMatrix(diagonal=[0.25, 4.0])
    rng = np.random.default_rng(0)
    draws = np.array([sample_momentum(M, rng) for _ in range(20000)])
    np.testing.assert_allclose(draws.var(axis=0), [0.25, 4.0], rtol=0.05)


def test_acceptance_probability():
    assert acceptance_probability(0.0) == 1.0
    assert acceptance_probability(3.0) == 1.0
    assert acceptance_probability(1e308) == 1.0
    assert acceptance_probability(-math.log(4.0)) == pytest.approx(0.25)
    assert acceptance_probability(-math.inf) == 0.0
    assert acceptance_probability(math.nan) == 0.0


def test_metropolis_tie_keeps_proposal():
    assert metropolis(0.3, 0.3, "new", "old") == "new"
    assert metropolis(0.3, 0.31, "new", "old") == "old"
    assert metropolis(1.0, 0.0, "new", "old") == "new"


@settings(max_examples=100, deadline=None)
@given(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False))
def test_acceptance_probability_in_unit_interval(delta):
    assert 0.0 <= acceptance_probability(delta) <= 1.0
