"""Gaussian incident wavepackets in position and momentum space."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import erfc

from .potentials import PhysicalConfig

LEAKAGE_THRESHOLD = 1e-6


class Support(str, Enum):
    ABOVE = "AboveBarrier"
    BELOW = "BelowBarrier"
    MIXED = "Mixed"


class LeakageWarning(UserWarning):
    """The packet has non-negligible weight inside or beyond the barrier."""


@dataclass(frozen=True)
class GaussianPacket:
    q0: float
    k0: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    def shifted(self, dq):
        return GaussianPacket(self.q0 + dq, self.k0, self.sigma)

    def to_json(self):
        return {"q0": self.q0, "k0": self.k0, "sigma": self.sigma}

    @classmethod
    def from_json(cls, block):
        return cls(q0=float(block["q0"]), k0=float(block["k0"]), sigma=float(block["sigma"]))


def position_amp(pkt: GaussianPacket, q):
    q = np.asarray(q, dtype=float)
    norm = (pkt.sigma * math.sqrt(2 * math.pi)) ** -0.5
    return (norm * np.exp(-((q - pkt.q0) ** 2) / (4 * pkt.sigma**2) + 1j * pkt.k0 * q))[()]


def momentum_amp(pkt: GaussianPacket, k, cfg: PhysicalConfig | None = None):
    """Fourier transform (2 pi)^{-1/2} int dq e^{-ikq} psi(q), normalised over k.

    The argument is a wavenumber; ``cfg`` is accepted for API symmetry and
    unused because the transform is taken in k.
    """
    k = np.asarray(k, dtype=float)
    s2 = pkt.sigma**2
    dk = k - pkt.k0
    norm = (2 * s2 / math.pi) ** 0.25
    return (norm * np.exp(-s2 * dk * dk - 1j * dk * pkt.q0)).astype(complex)[()]


def momentum_density(pkt: GaussianPacket, k):
    """|psi~(k)|^2, computed without forming the complex amplitude."""
    k = np.asarray(k, dtype=float)
    s2 = pkt.sigma**2
    return (math.sqrt(2 * s2 / math.pi) * np.exp(-2 * s2 * (k - pkt.k0) ** 2))[()]


def p_amp(pkt: GaussianPacket, p, cfg: PhysicalConfig):
    """Amplitude over momentum p = hbar k, normalised so int |psi(p)|^2 dp = 1."""
    return momentum_amp(pkt, np.asarray(p) / cfg.hbar) / math.sqrt(cfg.hbar)


def overlap_phi(pkt: GaussianPacket, zeta):
    """int d eta phi*(eta - zeta/2) phi(eta + zeta/2) for the Gaussian envelope."""
    zeta = np.asarray(zeta, dtype=float)
    return np.exp(-zeta * zeta / (8 * pkt.sigma**2))[()]


def support_classification(pkt: GaussianPacket, kappa: float, n_sigmas: float = 5.0) -> Support:
    if n_sigmas < 1:
        raise ValueError("n_sigmas must be at least 1")
    spread = n_sigmas / (2 * pkt.sigma)
    if pkt.k0 - spread > kappa:
        return Support.ABOVE
    if pkt.k0 + spread < kappa:
        return Support.BELOW
    return Support.MIXED


def leakage(pkt: GaussianPacket, edge: float) -> float:
    """Probability int_edge^inf |psi(q)|^2 dq."""
    return float(0.5 * erfc((edge - pkt.q0) / (math.sqrt(2) * pkt.sigma)))


def check_leakage(pkt: GaussianPacket, edge: float, threshold: float = LEAKAGE_THRESHOLD) -> float:
    """Compute the leakage past ``edge`` and warn when it exceeds ``threshold``."""
    value = leakage(pkt, edge)
    if value > threshold:
        warnings.warn(
            f"packet weight {value:.3e} beyond q = {edge} exceeds {threshold:.0e}",
            LeakageWarning,
            stacklevel=2,
        )
    return value
