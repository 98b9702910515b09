import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import simpson
from scipy.special import hyp0f1 as ref_hyp0f1
from scipy.special import i0 as ref_i0

from toa_lab.errors import DerivativeUnavailable, NotAnalytic
from toa_lab.kernels import (Provenance, Region, TimeKernel, WeylSeries, barrier_kernel_piece,
                             barrier_kernel_stitched, boundary_defects, free_kernel,
                             hermiticity_defect, supra_correction_chain, supra_correction_n1,
                             tke_residual, weyl_kernel, zero_kernel)
from toa_lab.ordering import builtin, closed_form_kernel, deform
from toa_lab.potentials import (Free, Harmonic, Linear, PhysicalConfig, Polynomial, SquareBarrier,
                                derivative, evaluate)

CFG = PhysicalConfig()
BARRIER = SquareBarrier(1.0, 1.0, 0.5)
AXIS = np.linspace(-2, 2, 20)
E, Z = np.meshgrid(AXIS, AXIS, indexing="ij")
QUARTIC = Polynomial((0.0, 0.0, 0.0, 0.0, 1.0))
# nested quadrature value of the leading quartic correction at (1, 1)
QUARTIC_SUPRA_11 = 0.051071682832818516


def test_weyl_free_is_half_eta():
    T = weyl_kernel(Free(), CFG)
    assert np.array_equal(T(E, Z), 0.5 * E)
    assert T.provenance is Provenance.WEYL_INTEGRAL


@pytest.mark.parametrize("V", [Linear(1.0), Harmonic(1.0), Linear(-0.7), Harmonic(1.8)])
def test_weyl_quadrature_matches_closed_form(V):
    T = weyl_kernel(V, CFG)
    ref = closed_form_kernel("weyl", V, E, Z, CFG)
    assert np.max(np.abs(T(E, Z) - ref) / np.abs(ref)) < 1e-10


@pytest.mark.parametrize("V", [Linear(1.0), Harmonic(1.0), Polynomial((0.3, -1.0, 0.5, 0.2))])
def test_weyl_series_matches_quadrature(V):
    T = weyl_kernel(V, CFG)
    series = T.metadata["series"]
    np.testing.assert_allclose(series.derivative(0, E, Z), T(E, Z), rtol=1e-10, atol=1e-13)


def test_weyl_series_derivatives_match_finite_differences():
    T = weyl_kernel(Polynomial((0.0, 0.5, 0.0, 0.3)), CFG)
    no_analytic = TimeKernel(T.evaluator, T.provenance)
    # difference quotients lose roughly a factor 1/h per order against quadrature noise
    for order, rtol in ((1, 1e-8), (2, 1e-6), (3, 1e-4)):
        np.testing.assert_allclose(T.derivative(order, 0.9, 0.7), no_analytic.derivative(order, 0.9, 0.7),
                                   rtol=rtol)


def test_weyl_series_polynomial_exact():
    s = WeylSeries((0.0, 1.0), CFG)
    # P_1(eta) = int_0^eta (eta - s) ds = eta^2 / 2
    np.testing.assert_allclose(s.P(1), [0, 0, 0.5])


def test_weyl_rejects_barrier():
    with pytest.raises(NotAnalytic):
        weyl_kernel(BARRIER, CFG)


def test_barrier_pieces():
    for region in Region:
        assert barrier_kernel_piece(BARRIER, region, CFG)(0.8, 0.0) == pytest.approx(0.4)
    expected = -0.1 - 0.25 * ref_i0(math.sqrt(2))
    assert barrier_kernel_piece(BARRIER, "II", CFG)(-0.7, 1.0) == pytest.approx(expected, rel=1e-14)
    flat = barrier_kernel_piece(SquareBarrier(0.0, 1.0, 0.5), "III", CFG)
    np.testing.assert_allclose(flat(E, Z), 0.5 * E, atol=1e-15)
    thin = barrier_kernel_piece(SquareBarrier(3.0, 1.0, 1.0), "III", CFG)
    np.testing.assert_allclose(thin(E, Z), 0.5 * E, atol=1e-15)


def test_region_three_antidiagonal():
    T = barrier_kernel_piece(BARRIER, "III", CFG)
    zeta = np.linspace(-3, 3, 13)
    from scipy.special import j0
    np.testing.assert_allclose(T(0.0, zeta), 0.25 * (1 - j0(math.sqrt(2) * np.abs(zeta))), atol=1e-15)


def test_stitched_kernel_is_not_differentiable():
    T = barrier_kernel_stitched(BARRIER, CFG)
    assert T(-2.0, 0.3) == barrier_kernel_piece(BARRIER, "III", CFG)(-2.0, 0.3)
    assert T(-0.7, 0.3) == barrier_kernel_piece(BARRIER, "II", CFG)(-0.7, 0.3)
    assert T(0.4, 0.3) == barrier_kernel_piece(BARRIER, "I", CFG)(0.4, 0.3)
    with pytest.raises(DerivativeUnavailable):
        T.derivative(1, 0.0, 0.1)


@pytest.mark.parametrize("name", ["born_jordan", "simple_symmetric"])
def test_barrier_pieces_deform_unchanged(name):
    for region in Region:
        piece = barrier_kernel_piece(BARRIER, region, CFG)
        assert np.array_equal(deform(name, piece)(E, Z), piece(E, Z))


def test_fd_derivative_limits():
    T = TimeKernel(lambda e, z: np.sin(e) + 0 * z, Provenance.CLOSED_FORM)
    assert T.derivative(2, 0.4, 0.0) == pytest.approx(-math.sin(0.4), rel=1e-8)
    with pytest.raises(DerivativeUnavailable):
        T.derivative(5, 0.4, 0.0)


def test_supra_zero_for_low_degree():
    for V in (Free(), Linear(1.0), Harmonic(2.0)):
        K = supra_correction_n1(V, weyl_kernel(V, CFG), CFG)
        assert np.all(K(E, Z) == 0)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_supra_barrier_chain_vanishes(n):
    K = supra_correction_chain(BARRIER, n, CFG)
    assert np.all(K(E, Z) == 0)
    log = K.metadata["derivation_log"]
    assert log and all(step["vanishes"] for step in log)
    assert {step["region"] for step in log} == {"I", "II", "III"}


def test_supra_n1_barrier_routes_to_chain():
    K = supra_correction_n1(BARRIER, barrier_kernel_stitched(BARRIER, CFG), CFG)
    assert K(0.3, 1.0) == 0.0


def test_supra_quartic_frozen_and_simpson_oracle():
    T = weyl_kernel(QUARTIC, CFG)
    got = float(supra_correction_n1(QUARTIC, T, CFG)(1.0, 1.0))
    assert got == pytest.approx(QUARTIC_SUPRA_11, rel=1e-10)
    n = 513
    s = np.linspace(0.0, 1.0, n)
    w = np.linspace(0.0, 1.0, n)
    S, W = np.meshgrid(s, w, indexing="ij")
    G = ref_hyp0f1(1, 0.5 * (1.0 - W**2) * (1.0 - S**4))
    inner = simpson(W**3 * G * T(S, W), x=w, axis=1)
    oracle = simpson(24 * s * inner, x=s) / 24
    assert got == pytest.approx(oracle, rel=1e-6)


def test_tke_residuals():
    H = Harmonic(1.0)
    assert tke_residual(free_kernel(), Free(), 0.7, -0.2, CFG) == 0.0
    weyl = weyl_kernel(H, CFG)
    assert abs(tke_residual(weyl, H, 1.0, 0.3, CFG)) < 1e-6
    bj = deform(builtin("born_jordan"), weyl)
    assert abs(tke_residual(bj, H, 1.0, 0.3, CFG)) > 1e-3
    with pytest.raises(DerivativeUnavailable):
        tke_residual(barrier_kernel_piece(BARRIER, "II", CFG), BARRIER, -0.5005, 0.2, CFG)


def test_boundary_conditions():
    pts = np.linspace(-2, 2, 9)
    d = boundary_defects(free_kernel(), pts)
    assert d == {"diagonal": 0.0, "antidiagonal": 0.0}
    d = boundary_defects(weyl_kernel(Harmonic(1.0), CFG), pts)
    assert d["diagonal"] < 1e-15 and d["antidiagonal"] < 1e-15


def test_zero_kernel_metadata():
    K = zero_kernel(label="z", metadata={"order": 2})
    assert K.metadata["order"] == 2
    assert K.derivative(3, 1.0, 1.0) == 0.0


@settings(max_examples=30, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2))
def test_kernels_real_and_hermitian(eta, zeta):
    kernels = [weyl_kernel(Linear(1.0), CFG), weyl_kernel(Harmonic(1.0), CFG),
               deform("born_jordan", weyl_kernel(Linear(1.0), CFG))]
    kernels += [barrier_kernel_piece(BARRIER, r, CFG) for r in Region]
    for T in kernels:
        assert hermiticity_defect(T, eta, zeta) == 0.0
        assert np.isrealobj(T(eta, zeta))


def test_quartic_potential_pieces():
    assert evaluate(QUARTIC, 2.0) == 16.0
    assert derivative(QUARTIC, 1.0, 3) == 24.0
