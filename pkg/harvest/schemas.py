# harvest/schemas.py
from __future__ import annotations

import math
from enum import Enum
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class Scenario(str, Enum):
    INERTIAL = "inertial"
    PARALLEL = "parallel"
    ANTIPARALLEL = "antiparallel"
    PERPENDICULAR = "perpendicular"

    @property
    def accelerated(self) -> bool:
        return self is not Scenario.INERTIAL


ACCELERATED = (Scenario.PARALLEL, Scenario.ANTIPARALLEL, Scenario.PERPENDICULAR)


class PhysicalConfig(BaseModel):
    """One evaluation point in units of the switching duration (sigma = 1)."""

    model_config = ConfigDict(frozen=True)

    a_sigma: float = Field(0.0, ge=0)
    omega_sigma: float = 0.0
    l_sigma: float = Field(..., gt=0)

    @field_validator("a_sigma", "omega_sigma", "l_sigma")
    @classmethod
    def _finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("must be finite")
        return v


class ObservableRecord(BaseModel):
    """Observables per lambda^2 for one (scenario, config) pair."""

    model_config = ConfigDict(frozen=True)

    scenario: Scenario
    cfg: PhysicalConfig
    p: float  # P / lambda^2
    re_x: float
    im_x: float
    concurrence: float
    p_err: float = 0.0
    x_err: float = 0.0
    status: Literal["ok", "nonconverged"] = "ok"

    @property
    def x(self) -> complex:
        return complex(self.re_x, self.im_x)

    @property
    def abs_x(self) -> float:
        return abs(self.x)


class SweepSpec(BaseModel):
    """A uniform, inclusive grid over one PhysicalConfig field with the other two fixed."""

    model_config = ConfigDict(frozen=True)

    scenario: Scenario
    vary: Literal["l_sigma", "a_sigma", "omega_sigma"]
    start: float
    stop: float
    points: int = Field(..., ge=2)
    a_sigma: float = 0.0
    omega_sigma: float = 0.0
    l_sigma: float = 1.0
    tol: float = Field(1e-9, gt=0)

    @model_validator(mode="after")
    def _ordered(self) -> SweepSpec:
        if not self.start < self.stop:
            raise ValueError(f"sweep needs start < stop, got {self.start} .. {self.stop}")
        return self

    def grid(self) -> list[float]:
        return [float(v) for v in np.linspace(self.start, self.stop, self.points)]

    def configs(self) -> list[PhysicalConfig]:
        fixed = {"a_sigma": self.a_sigma, "omega_sigma": self.omega_sigma, "l_sigma": self.l_sigma}
        return [PhysicalConfig(**{**fixed, self.vary: v}) for v in self.grid()]


class RangeResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    l_max_sigma: float = Field(..., ge=0)
    bracket_width: float = Field(..., ge=0)
    evaluations: int = 0
    l_hi: float = 12.0
    scan_points: int = 80
    status: Literal["ok", "no_entanglement", "nonconverged"] = "ok"


class LmaxRow(BaseModel):
    """One point of an L_max-versus-gap curve."""

    model_config = ConfigDict(frozen=True)

    scenario: Scenario
    a_sigma: float
    omega_sigma: float
    result: RangeResult


class RunManifest(BaseModel):
    """Everything needed to reproduce an output file."""

    command: str
    tool_version: str
    tol: float
    inner_tol: float
    a_min: float
    sweep: SweepSpec | None = None
    preset: str | None = None
    lmax: dict[str, float | int] | None = None
    wall_time_s: float = 0.0
