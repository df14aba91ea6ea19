import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snlevy.errors import DomainError
from snlevy.model import CompoundPoissonExp, LevyModel, laplace_exponent, phi_inverse


def test_psi_standard_brownian(std_brownian):
    assert laplace_exponent(std_brownian, 1.0) == pytest.approx(0.5)


def test_psi_linear_brownian(linear_brownian):
    assert laplace_exponent(linear_brownian, 2.0) == pytest.approx(4.0)


def test_psi_cpexp_cancellation():
    # jump term lambda*(rho/(rho+theta) - 1) with rho = 1, theta = 1
    m = LevyModel(sigma=1.0, jumps=CompoundPoissonExp(rate=1.0, mean_jump=1.0))
    assert laplace_exponent(m, 1.0) == pytest.approx(0.5 + 1.0 * (0.5 - 1.0))


def test_psi_negative_theta_rejected(std_brownian):
    with pytest.raises(DomainError):
        laplace_exponent(std_brownian, -0.1)


def test_model_validation():
    with pytest.raises(DomainError):
        LevyModel(sigma=-1.0)
    with pytest.raises(DomainError):
        LevyModel(sigma=0.0)  # jump-free needs sigma > 0
    with pytest.raises(DomainError):
        # negative of a subordinator: pure downward jumps with downward drift
        LevyModel(sigma=0.0, gamma=-1.0,
                  jumps=CompoundPoissonExp(rate=1.0, mean_jump=1.0))
    with pytest.raises(DomainError):
        CompoundPoissonExp(rate=0.0, mean_jump=1.0)


def test_unbounded_variation_flag():
    m = LevyModel(sigma=0.0, gamma=2.0,
                  jumps=CompoundPoissonExp(rate=1.0, mean_jump=1.0))
    assert not m.has_unbounded_variation
    with pytest.raises(DomainError):
        m.require_unbounded_variation()


def test_phi_standard_brownian(std_brownian):
    sol = phi_inverse(std_brownian, 0.5)
    assert sol.phi == pytest.approx(1.0, abs=1e-12)
    assert sol.phi_prime == pytest.approx(1.0, abs=1e-12)
    assert abs(sol.residual) <= 1e-12


def test_phi_linear_brownian(linear_brownian):
    # roots of s^2/2 + s = q: Phi(q) = -1 + sqrt(1 + 2q)
    sol = phi_inverse(linear_brownian, 1.5)
    assert sol.phi == pytest.approx(1.0, abs=1e-12)


def test_phi_zero_with_positive_drift(linear_brownian):
    sol = phi_inverse(linear_brownian, 0.0)
    assert sol.phi == 0.0
    assert sol.phi_prime == pytest.approx(1.0)


def test_phi_zero_drift_convention(std_brownian):
    # psi'(0) = 0: Phi'(0) = inf by convention
    assert phi_inverse(std_brownian, 0.0).phi_prime == math.inf


def test_phi_negative_drift_positive_root():
    m = LevyModel(sigma=1.0, gamma=-1.0)
    sol = phi_inverse(m, 0.0)
    assert sol.phi == pytest.approx(2.0, abs=1e-10)


def test_phi_rejects_negative_q(std_brownian):
    with pytest.raises(DomainError):
        phi_inverse(std_brownian, -1.0)


def test_roundtrip_and_serialization(model_zoo):
    for m in model_zoo:
        assert LevyModel.from_dict(m.to_dict()) == m


@settings(max_examples=60, deadline=None)
@given(
    sigma=st.floats(0.3, 2.0),
    gamma=st.floats(-2.0, 2.0),
    rate=st.floats(0.1, 3.0),
    mean_jump=st.floats(0.2, 2.0),
    q1=st.floats(0.0, 4.0),
    q2=st.floats(0.0, 4.0),
    t1=st.floats(0.0, 5.0),
    t2=st.floats(0.0, 5.0),
)
def test_phi_and_psi_invariants(sigma, gamma, rate, mean_jump, q1, q2, t1, t2):
    m = LevyModel(sigma=sigma, gamma=gamma,
                  jumps=CompoundPoissonExp(rate=rate, mean_jump=mean_jump))
    # right inverse solves psi(Phi(q)) = q
    for q in (q1, q2):
        sol = phi_inverse(m, q)
        assert abs(m.psi(sol.phi) - q) <= 1e-12 * max(1.0, q)
    # Phi is nondecreasing
    lo, hi = sorted((q1, q2))
    assert phi_inverse(m, lo).phi <= phi_inverse(m, hi).phi + 1e-12
    # psi midpoint convexity
    mid = 0.5 * (t1 + t2)
    assert m.psi(mid) <= 0.5 * (m.psi(t1) + m.psi(t2)) + 1e-12


def test_psi_prime_is_derivative(model_zoo):
    for m in model_zoo:
        for s in (0.0, 0.5, 2.0):
            h = 1e-6
            fd = (m.psi(s + h) - m.psi(s + 1e-30)) / h
            assert m.psi_prime(s) == pytest.approx(fd, rel=1e-4, abs=1e-4)
