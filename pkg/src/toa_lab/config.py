"""Validated experiment configuration for the command-line front end."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator

from . import potentials
from .numerics import Tolerance
from .ordering import BUILTIN_NAMES, OrderingRule, resolve
from .potentials import PhysicalConfig
from .wavepackets import GaussianPacket


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PhysicalBlock(_Strict):
    mu: float = Field(1.0, gt=0)
    hbar: float = Field(1.0, gt=0)
    rel_tol: float = Field(1e-10, gt=0)
    abs_tol: float = Field(1e-13, ge=0)
    max_subdivisions: int = Field(4000, ge=1)


class FreeBlock(_Strict):
    type: Literal["free"]


class LinearBlock(_Strict):
    type: Literal["linear"]
    lam: float


class HarmonicBlock(_Strict):
    type: Literal["harmonic"]
    omega: float


class PolynomialBlock(_Strict):
    type: Literal["polynomial"]
    coeffs: list[float]


class BarrierBlock(_Strict):
    type: Literal["square_barrier"]
    V0: float = Field(ge=0)
    a: float = Field(ge=0)
    b: float = Field(ge=0)


PotentialBlock = Union[FreeBlock, LinearBlock, HarmonicBlock, PolynomialBlock, BarrierBlock]


class PacketBlock(_Strict):
    q0: float
    k0: float
    sigma: float = Field(gt=0)


class RuleBlock(_Strict):
    name: str = "custom"
    alpha: list[float]
    truncation: int = Field(20, ge=1)


class TauGrid(_Strict):
    lo: float | None = None
    hi: float | None = None
    n: int = Field(600, ge=3)


class EtaZetaGrid(_Strict):
    extent: float = Field(2.0, gt=0)
    n: int = Field(20, ge=2)


class QGrid(_Strict):
    lo: float = -3.0
    hi: float = 3.0
    n: int = Field(121, ge=2)


class Grids(_Strict):
    tau: TauGrid = TauGrid()
    eta_zeta: EtaZetaGrid = EtaZetaGrid()
    q: QGrid = QGrid()


class ExperimentConfig(_Strict):
    physical: PhysicalBlock = PhysicalBlock()
    potential: PotentialBlock = Field(default_factory=lambda: BarrierBlock(type="square_barrier", V0=200.0, a=1.0, b=0.5),
                                      discriminator="type")
    packet: PacketBlock = PacketBlock(q0=-9.0, k0=15.0, sigma=1.2)
    ordering: Union[str, RuleBlock] = "weyl"
    grids: Grids = Grids()
    epsilon: float = Field(0.05, gt=0)
    tau: float = 0.0

    @field_validator("ordering")
    @classmethod
    def _known_rule(cls, value):
        if isinstance(value, str) and value not in BUILTIN_NAMES:
            raise ValueError(f"unknown ordering {value!r}; expected one of {BUILTIN_NAMES}")
        if isinstance(value, RuleBlock):
            # surfaces InvalidRule as a validation error
            try:
                OrderingRule(value.name, tuple(value.alpha), value.truncation)
            except ValueError as exc:
                raise ValueError(str(exc)) from exc
        return value

    def physical_config(self) -> PhysicalConfig:
        p = self.physical
        tol = Tolerance(rel_tol=p.rel_tol, abs_tol=p.abs_tol, max_subdivisions=p.max_subdivisions)
        return PhysicalConfig(mu=p.mu, hbar=p.hbar, tol=tol)

    def build_potential(self):
        return potentials.from_json(self.potential.model_dump(), mu=self.physical.mu)

    def build_packet(self) -> GaussianPacket:
        return GaussianPacket(self.packet.q0, self.packet.k0, self.packet.sigma)

    def build_rule(self) -> OrderingRule:
        if isinstance(self.ordering, str):
            return resolve(self.ordering)
        return OrderingRule(self.ordering.name, tuple(self.ordering.alpha), self.ordering.truncation)

    def resolved(self) -> dict:
        return json.loads(self.model_dump_json())


def load_config(path: str | Path | None, overrides: dict | None = None) -> ExperimentConfig:
    data = {} if path is None else json.loads(Path(path).read_text())
    for dotted, value in (overrides or {}).items():
        node = data
        keys = dotted.split(".")
        for key in keys[:-1]:
            node = node.setdefault(key, {})
        node[keys[-1]] = value
    return ExperimentConfig.model_validate(data)
