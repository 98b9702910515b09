import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from toa_lab.errors import InvalidRule, UnknownRule, UnsupportedCombination
from toa_lab.kernels import Provenance, free_kernel, weyl_kernel
from toa_lab.numerics import hyp0f1
from toa_lab.ordering import OrderingRule, builtin, closed_form_kernel, deform, resolve
from toa_lab.potentials import Harmonic, Linear, PhysicalConfig, Polynomial

CFG = PhysicalConfig()
AXIS = np.linspace(-2, 2, 20)
E, Z = np.meshgrid(AXIS, AXIS, indexing="ij")


def test_builtin_coefficients():
    assert builtin("weyl").alpha == (1.0,)
    assert builtin("born_jordan").alpha[2] == pytest.approx(-1 / 24)
    assert builtin("simple_symmetric").alpha[2] == pytest.approx(-1 / 8)
    assert builtin("born_jordan").theta(1.3) == pytest.approx(math.sin(0.65) / 0.65, rel=1e-14)
    assert builtin("simple_symmetric").theta(1.3) == pytest.approx(math.cos(0.65), rel=1e-14)


def test_rule_validation():
    with pytest.raises(UnknownRule):
        builtin("moyal")
    with pytest.raises(InvalidRule):
        OrderingRule("bad", (2.0,))
    with pytest.raises(InvalidRule):
        OrderingRule("bad", (1.0, 0.1))
    with pytest.raises(InvalidRule):
        resolve(3)


def test_rule_json_round_trip():
    rule = OrderingRule("custom", (1.0, 0.0, 0.3, 0.0, -0.01))
    assert resolve(rule.to_json()).alpha == rule.alpha
    assert resolve("born_jordan").name == "born_jordan"


def test_deform_weyl_is_identity():
    T = weyl_kernel(Harmonic(1.0), CFG)
    assert np.array_equal(deform("weyl", T)(E, Z), T(E, Z))


@pytest.mark.parametrize("name", ["born_jordan", "simple_symmetric"])
def test_free_kernel_fixed_point(name):
    out = deform(name, free_kernel())
    assert np.array_equal(out(E, Z), 0.5 * E)
    assert out.provenance is Provenance.DEFORMED


def test_harmonic_deformations():
    T = weyl_kernel(Harmonic(1.0), CFG)
    x = 0.5 * Z**2
    np.testing.assert_allclose(deform("born_jordan", T)(E, Z), np.sinh(x) / np.where(x == 0, 1, x) * T(E, Z),
                               rtol=1e-12)
    np.testing.assert_allclose(deform("simple_symmetric", T)(E, Z), np.cosh(x) * T(E, Z), rtol=1e-12)


@pytest.mark.parametrize("name", ["born_jordan", "simple_symmetric"])
@pytest.mark.parametrize("V", [Linear(1.0), Harmonic(1.0)])
def test_deformed_matches_closed_form(name, V):
    got = deform(name, weyl_kernel(V, CFG))(E, Z)
    ref = closed_form_kernel(name, V, E, Z, CFG)
    assert np.max(np.abs(got - ref) / np.abs(ref)) < 1e-8


def test_closed_form_special_cases():
    assert closed_form_kernel("weyl", Linear(2.0), 1.3, 0.0) == pytest.approx(0.65)
    eta, zeta, lam = 0.7, 1.1, 1.0
    c = lam * zeta**2 / 2
    x, y = eta + zeta / 2, eta - zeta / 2
    bj = (x * x * hyp0f1(3, c * x) - y * y * hyp0f1(3, c * y)) / (4 * zeta)
    assert closed_form_kernel("born_jordan", Linear(lam), eta, zeta) == pytest.approx(bj, rel=1e-13)
    w = 1.0
    ss = math.cosh(w * zeta**2 / 2) * math.sinh(w * eta * zeta) / (w * zeta) / 2
    assert closed_form_kernel("simple_symmetric", Harmonic(w), eta, zeta) == pytest.approx(ss, rel=1e-13)


def test_born_jordan_linear_small_zeta_branch():
    # the two evaluation branches meet continuously at |zeta| = 0.1
    a = closed_form_kernel("born_jordan", Linear(1.0), 0.8, 0.1 - 1e-12)
    b = closed_form_kernel("born_jordan", Linear(1.0), 0.8, 0.1 + 1e-12)
    assert a == pytest.approx(b, rel=1e-11)
    assert closed_form_kernel("born_jordan", Linear(1.0), 0.8, 0.0) == pytest.approx(0.4, rel=1e-14)


def test_closed_form_unsupported():
    with pytest.raises(UnsupportedCombination):
        closed_form_kernel("born_jordan", Polynomial((0, 0, 0, 1.0)), 0.1, 0.1)
    with pytest.raises(UnsupportedCombination):
        closed_form_kernel(OrderingRule("c", (1.0, 0, 0.2)), Linear(1.0), 0.1, 0.1)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=1, max_size=4), st.floats(-2, 2), st.floats(-2, 2))
def test_deformed_kernel_hermitian(coeffs, eta, zeta):
    alpha = [1.0]
    for c in coeffs:
        alpha += [0.0, c]
    T = deform(OrderingRule("r", tuple(alpha)), weyl_kernel(Harmonic(1.0), CFG))
    assert T(eta, zeta) == T(eta, -zeta)
