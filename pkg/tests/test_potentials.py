import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from toa_lab.errors import NotAnalytic, WrongVariant
from toa_lab.potentials import (Free, Harmonic, Linear, NonArrival, PhysicalConfig, Polynomial,
                                SquareBarrier, classical_toa, derivative, evaluate, from_json,
                                heaviside, kappa_o, poly_coeffs, sgn, taylor_coeff, to_json)

CFG = PhysicalConfig()


def test_edge_conventions():
    assert heaviside(0.0) == 0.5
    assert sgn(0.0) == 0.0


def test_config_validation():
    with pytest.raises(ValueError):
        PhysicalConfig(mu=0)
    with pytest.raises(ValueError):
        PhysicalConfig(hbar=-1)
    assert PhysicalConfig(hbar=2).momentum(3) == 6


def test_barrier_geometry():
    V = SquareBarrier(1.0, 1.0, 0.5)
    assert evaluate(V, -0.75) == 1.0
    assert evaluate(V, 0.2) == 0.0
    assert V.L == 0.5
    assert SquareBarrier.from_edge(1.0, -1.0, 0.5) == V
    with pytest.raises(ValueError):
        SquareBarrier(1.0, 0.5, 1.0)
    with pytest.raises(ValueError):
        SquareBarrier(-1.0, 1.0, 0.5)


def test_evaluate_analytic_variants():
    assert evaluate(Harmonic(2.0), 3.0) == 18.0
    assert evaluate(Linear(3.0), -2.0) == -6.0
    assert evaluate(Free(), 5.0) == 0.0
    assert evaluate(Polynomial((1.0, 0.0, 2.0)), 2.0) == 9.0


def test_taylor_coefficients():
    assert taylor_coeff(Linear(3.0), 1) == 3.0
    assert taylor_coeff(Harmonic(2.0), 2) == 2.0
    assert taylor_coeff(Harmonic(2.0), 3) == 0.0
    assert poly_coeffs(Harmonic(2.0)) == (0.0, 0.0, 2.0)
    with pytest.raises(NotAnalytic):
        taylor_coeff(SquareBarrier(1.0, 1.0, 0.5), 0)


@pytest.mark.parametrize("V", [Free(), Linear(-1.3), Harmonic(0.7, mu=2.0), Polynomial((0.1, 0, -1, 0.5, 2))])
def test_taylor_reconstructs_potential(V):
    q = np.linspace(-2, 2, 41)
    series = sum(taylor_coeff(V, n) * q**n for n in range(7))
    assert np.max(np.abs(series - evaluate(V, q))) < 1e-12


def test_derivative_of_quartic():
    assert derivative(Polynomial((0, 0, 0, 0, 1.0)), 2.0, 3) == 48.0


def test_kappa_values():
    assert kappa_o(SquareBarrier(1.0, 1, 0.5), CFG) == pytest.approx(math.sqrt(2))
    assert kappa_o(SquareBarrier(1.0, 1, 0.5), PhysicalConfig(mu=2.0)) == pytest.approx(2.0)
    assert kappa_o(SquareBarrier(0.0, 1, 0.5), CFG) == 0.0
    with pytest.raises(WrongVariant):
        kappa_o(Free(), CFG)


@given(st.floats(0, 100), st.floats(0, 100))
def test_kappa_monotone(v1, v2):
    lo, hi = sorted((v1, v2))
    assert kappa_o(SquareBarrier(lo, 1, 0.5), CFG) <= kappa_o(SquareBarrier(hi, 1, 0.5), CFG)


def test_classical_toa_free():
    assert classical_toa(Free(), -9.0, 15.0, CFG) == pytest.approx(0.6, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(-20, -0.1), st.floats(0.5, 30))
def test_classical_toa_free_closed_form(q, p):
    assert classical_toa(Free(), q, p, CFG) == pytest.approx(-q / p, rel=1e-10)


def test_classical_toa_linear_kinematics():
    # uniform force -lam: q(t) = q + p t - lam t^2 / 2, first root of q(t) = 0
    lam, q, p = 1.0, -2.0, 3.0
    exact = (p - math.sqrt(p * p + 2 * lam * q)) / lam
    assert classical_toa(Linear(lam), q, p, CFG) == pytest.approx(exact, rel=1e-9)


def test_classical_toa_barrier():
    V = SquareBarrier(1.0, 1.0, 0.5)
    assert isinstance(classical_toa(V, -3.0, 1.0, CFG), NonArrival)
    # above the barrier the particle slows to sqrt(p^2 - 2 mu V0) inside it
    p = 3.0
    expected = (3.0 - 0.5) / p + 0.5 / math.sqrt(p * p - 2.0)
    assert classical_toa(V, -3.0, p, CFG) == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize("V", [Free(), Linear(2.0), Harmonic(1.5), Polynomial((1.0, 2.0)),
                               SquareBarrier(3.0, 2.0, 1.0)])
def test_json_round_trip(V):
    assert from_json(to_json(V), mu=1.0) == V


def test_json_unknown_type():
    with pytest.raises(WrongVariant):
        from_json({"type": "morse"})
