import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from toa_lab.errors import DomainError
from toa_lab.eigenfunctions import (Kind, ToaEigenfunction, apply_barrier_toa_momentum,
                                    barrier_eigenfunction, barrier_phase_factor, completeness_defect,
                                    critical_momentum, free_eigenfunction, position_density)
from toa_lab.potentials import PhysicalConfig, SquareBarrier

CFG = PhysicalConfig()
V = SquareBarrier(1.0, 0.75, 0.25)
# free non-nodal density at tau = 0, q = 0 with the default converging factor
FREE_DENSITY_ORIGIN = 1.701072611118212


def gaussian(center, width=1.0):
    norm = (2 * math.pi * width**2) ** -0.25
    return lambda p: norm * np.exp(-((np.asarray(p, float) - center) ** 2) / (4 * width**2)) + 0j


@settings(max_examples=50, deadline=None)
@given(st.floats(-30, 30), st.floats(-5, 5))
def test_free_modulus_and_time_reversal(p, tau):
    for kind in Kind:
        phi = free_eigenfunction(kind, tau, p, CFG)
        assert abs(phi) ** 2 == pytest.approx(abs(p) / (4 * math.pi * CFG.mu * CFG.hbar), rel=1e-12, abs=1e-300)
        assert free_eigenfunction(kind, -tau, p, CFG) == pytest.approx(np.conj(phi), abs=1e-14)


def test_free_vanishes_at_zero_and_nodal_is_odd():
    assert free_eigenfunction("NonNodal", 1.0, 0.0, CFG) == 0
    p = np.linspace(0.1, 5, 7)
    np.testing.assert_allclose(free_eigenfunction("Nodal", 0.4, -p, CFG), -free_eigenfunction("Nodal", 0.4, p, CFG))
    np.testing.assert_allclose(free_eigenfunction("NonNodal", 0.4, -p, CFG), free_eigenfunction("NonNodal", 0.4, p, CFG))


def test_phase_factor_unit_below_and_continuous_at_threshold():
    pc = critical_momentum(V, CFG)
    assert pc == pytest.approx(math.sqrt(2))
    below = np.linspace(0.0, pc * 0.999, 11)
    assert np.all(barrier_phase_factor(below, V, CFG) == 1.0)
    assert abs(barrier_phase_factor(pc * (1 + 1e-14), V, CFG) - 1.0) < 1e-6
    assert abs(barrier_phase_factor(pc * (1 + 1e-22), V, CFG) - barrier_phase_factor(pc * (1 - 1e-16), V, CFG)) < 1e-10
    above = np.linspace(pc * 1.01, 30, 11)
    np.testing.assert_allclose(np.abs(barrier_phase_factor(above, V, CFG)), 1.0, rtol=1e-14)


def test_barrier_eigenfunction_reduces_to_free():
    p = np.linspace(-10, 10, 41)
    for kind in Kind:
        for flat in (SquareBarrier(0.0, 0.75, 0.25), SquareBarrier(3.0, 0.5, 0.5)):
            np.testing.assert_allclose(barrier_eigenfunction(kind, 0.7, p, flat, CFG),
                                       free_eigenfunction(kind, 0.7, p, CFG), atol=1e-15)


def test_high_momentum_phase_approaches_free():
    # far above the barrier the accumulated phase tends to mu V0 L / p
    p = 400.0
    phase = np.angle(barrier_eigenfunction("NonNodal", 0.0, p, V, CFG))
    assert phase == pytest.approx(CFG.mu * V.V0 * V.L / p, rel=1e-4)


@pytest.mark.parametrize("tau", [-1.0, 0.0, 2.0])
def test_eigen_equation_positive_momenta(tau):
    pc = critical_momentum(V, CFG)
    p = np.concatenate([np.linspace(0.1, pc - 0.1, 30), np.linspace(pc + 0.1, 20.0, 120)])
    phi = lambda x: barrier_eigenfunction("NonNodal", tau, x, V, CFG)
    op = apply_barrier_toa_momentum(phi, V, CFG)
    assert np.max(np.abs(op(p) - tau * phi(p))) < 1e-8


def test_free_operator_limit():
    flat = SquareBarrier(0.0, 0.75, 0.25)
    phi = lambda x: free_eigenfunction("NonNodal", 1.5, x, CFG)
    op = apply_barrier_toa_momentum(phi, flat, CFG)
    p = np.linspace(0.2, 10, 50)
    assert np.max(np.abs(op(p) - 1.5 * phi(p))) < 1e-8


def test_operator_guard_band():
    op = apply_barrier_toa_momentum(lambda x: free_eigenfunction("NonNodal", 0.0, x, CFG), V, CFG)
    with pytest.raises(DomainError):
        op(np.array([0.01, 1.0]))


def test_position_densities():
    free = ToaEigenfunction("NonNodal", 0.0, CFG)
    assert position_density(free, 0.0) == pytest.approx(FREE_DENSITY_ORIGIN, rel=1e-10)
    assert position_density(ToaEigenfunction(Kind.NODAL, 0.0, CFG, V), 0.0) < 1e-10
    q = np.linspace(-2, 2, 41)
    dens = position_density(ToaEigenfunction(Kind.NON_NODAL, 0.0, CFG, V), q)
    assert q[np.argmax(dens)] == 0.0
    np.testing.assert_allclose(dens, dens[::-1], rtol=1e-10)
    with pytest.raises(ValueError):
        position_density(free, 0.0, eps=0.0)


def test_eigenfunction_object():
    e = ToaEigenfunction("Nodal", 0.3, CFG, V)
    assert e.kind is Kind.NODAL
    assert e.with_tau(1.0).tau == 1.0
    assert e(2.0) == barrier_eigenfunction("Nodal", 0.3, 2.0, V, CFG)


def test_completeness_sharpens_with_window():
    g = gaussian(15.0)
    defects = [abs(completeness_defect(V, g, g, CFG, T=T)) for T in (0.01, 0.1, 1.0)]
    assert defects[0] > defects[1] > defects[2]
    assert defects[-1] < 1e-3


def test_completeness_free_and_opposite_sectors():
    g = gaussian(6.0)
    assert abs(completeness_defect(None, g, g, CFG, T=50.0)) < 1e-3
    # opposite momentum signs decouple and disjoint supports give zero
    assert abs(completeness_defect(V, gaussian(15.0), gaussian(-15.0), CFG, T=200.0)) < 1e-12
