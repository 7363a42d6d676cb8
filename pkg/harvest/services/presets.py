# harvest/services/presets.py
"""
Figure presets: the fixed parameters quoted in each figure caption plus the swept axis.

fig2*  concurrence vs L/sigma,     a sigma = 0.50, Omega sigma = 0.01 / 0.50 / 2.00
fig3*  concurrence vs a sigma,     L/sigma = 0.50, Omega sigma = 0.01 / 0.50 / 2.00
fig4*  concurrence vs Omega sigma, a sigma = 0.50, L/sigma = 0.20 / 0.50 / 2.00
fig5*  L_max vs Omega sigma,       a sigma = 0.01 / 1.00

Axis ranges are not part of the captions; they cover the plotted windows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from harvest.errors import ValidationError
from harvest.schemas import Scenario, SweepSpec

CURVE_POINTS = 100
ALL_SCENARIOS = (Scenario.INERTIAL, Scenario.PARALLEL, Scenario.ANTIPARALLEL, Scenario.PERPENDICULAR)


@dataclass(frozen=True)
class FigurePreset:
    name: str
    kind: Literal["sweep", "lmax"]
    vary: Literal["l_sigma", "a_sigma", "omega_sigma"]
    start: float
    stop: float
    a_sigma: float
    omega_sigma: float = 0.0
    l_sigma: float = 1.0
    points: int = CURVE_POINTS
    scenarios: tuple[Scenario, ...] = ALL_SCENARIOS

    def sweep_specs(self, tol: float) -> list[SweepSpec]:
        if self.kind != "sweep":
            raise ValidationError(f"preset {self.name} is an L_max curve, not a sweep")
        return [
            SweepSpec(
                scenario=scenario,
                vary=self.vary,
                start=self.start,
                stop=self.stop,
                points=self.points,
                a_sigma=self.a_sigma,
                omega_sigma=self.omega_sigma,
                l_sigma=self.l_sigma,
                tol=tol,
            )
            for scenario in self.scenarios
        ]

    def omega_grid(self) -> list[float]:
        return [float(w) for w in np.linspace(self.start, self.stop, self.points)]


def _sweeps(prefix: str, vary, start: float, stop: float, fixed: str, values, **common) -> dict[str, FigurePreset]:
    out = {}
    for suffix, value in zip("abc", values, strict=True):
        name = f"{prefix}{suffix}"
        out[name] = FigurePreset(name=name, kind="sweep", vary=vary, start=start, stop=stop, **{fixed: value}, **common)
    return out


PRESETS: dict[str, FigurePreset] = {
    **_sweeps("fig2", "l_sigma", 0.1, 4.0, "omega_sigma", (0.01, 0.50, 2.00), a_sigma=0.50),
    **_sweeps("fig3", "a_sigma", 0.01, 2.0, "omega_sigma", (0.01, 0.50, 2.00), a_sigma=0.01, l_sigma=0.50),
    **_sweeps("fig4", "omega_sigma", 0.01, 4.0, "l_sigma", (0.20, 0.50, 2.00), a_sigma=0.50),
    "fig5a": FigurePreset(name="fig5a", kind="lmax", vary="omega_sigma", start=0.01, stop=4.0, a_sigma=0.01),
    "fig5b": FigurePreset(name="fig5b", kind="lmax", vary="omega_sigma", start=0.01, stop=4.0, a_sigma=1.00),
}


def get_preset(name: str) -> FigurePreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValidationError(f"unknown figure preset {name!r}; choose from {', '.join(PRESETS)}") from None
