import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from toa_lab.numerics import integrate
from toa_lab.potentials import PhysicalConfig
from toa_lab.wavepackets import (GaussianPacket, LeakageWarning, Support, check_leakage, leakage,
                                 momentum_amp, momentum_density, overlap_phi, p_amp, position_amp,
                                 support_classification)

PKT = GaussianPacket(-9.0, 15.0, 1.2)


def test_sigma_must_be_positive():
    with pytest.raises(ValueError):
        GaussianPacket(0, 1, 0)


def test_position_peak_value():
    assert abs(position_amp(PKT, -9.0)) == pytest.approx((1.2 * math.sqrt(2 * math.pi)) ** -0.5)
    assert position_amp(PKT, -9.0) == pytest.approx((1.2 * math.sqrt(2 * math.pi)) ** -0.5 * np.exp(-135j))


def test_momentum_peak_and_tail_ratio():
    assert abs(momentum_amp(PKT, 15.0)) == pytest.approx((2 * 1.44 / math.pi) ** 0.25)
    ratio = abs(momentum_amp(PKT, 0.0)) / abs(momentum_amp(PKT, 15.0))
    assert math.log(ratio) == pytest.approx(-1.44 * 225, rel=1e-12)


def test_momentum_amp_is_fourier_transform():
    for k in (13.7, 15.0, 16.2):
        direct = integrate(lambda q: np.exp(-1j * k * q) * position_amp(PKT, q), -30, 12).value
        assert direct / math.sqrt(2 * math.pi) == pytest.approx(momentum_amp(PKT, k), abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.floats(-10, 10), st.floats(-20, 20), st.floats(0.3, 3))
def test_parseval(q0, k0, sigma):
    pkt = GaussianPacket(q0, k0, sigma)
    nq = integrate(lambda q: np.abs(position_amp(pkt, q)) ** 2, q0 - 12 * sigma, q0 + 12 * sigma).value
    half = 12 / (2 * sigma)
    nk = integrate(lambda k: momentum_density(pkt, k), k0 - half, k0 + half).value
    assert nq == pytest.approx(1.0, abs=1e-10)
    assert nk == pytest.approx(nq, abs=1e-10)


def test_p_amp_normalised_in_momentum():
    cfg = PhysicalConfig(hbar=0.5)
    r = integrate(lambda p: np.abs(p_amp(PKT, p, cfg)) ** 2, 0.5 * 5, 0.5 * 25)
    assert r.value == pytest.approx(1.0, abs=1e-10)


def test_overlap_phi():
    assert overlap_phi(PKT, 0.0) == 1.0
    assert overlap_phi(PKT, 2 * 1.2) == pytest.approx(math.exp(-0.5))
    direct = integrate(lambda e: np.conj(position_amp(PKT, e - 0.6)) * position_amp(PKT, e + 0.6), -30, 12).value
    assert abs(direct) == pytest.approx(overlap_phi(PKT, 1.2), rel=1e-12)


@given(st.floats(-20, 20))
def test_overlap_bounded(zeta):
    assert overlap_phi(PKT, zeta) <= 1.0
    assert overlap_phi(PKT, zeta) == overlap_phi(PKT, -zeta)


def test_support_classification():
    assert support_classification(PKT, math.sqrt(2)) is Support.ABOVE
    assert support_classification(PKT, 20.0) is Support.BELOW
    assert support_classification(PKT, 15.0) is Support.MIXED


def test_leakage_warning():
    assert leakage(PKT, -0.5) < 1e-6
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        check_leakage(PKT, -0.5)
    with pytest.warns(LeakageWarning):
        check_leakage(GaussianPacket(-1.0, 15.0, 1.2), -0.5)
