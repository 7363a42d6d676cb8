# harvest/commands/lmax.py
from __future__ import annotations

import logging
from pathlib import Path

import click
import numpy as np

from harvest.commands._options import emit, format_option, jobs_option, out_option, run_context, scenario_option, tol_option
from harvest.config import settings
from harvest.errors import NonConvergenceError
from harvest.schemas import Scenario
from harvest.services import output, rangefinder

logger = logging.getLogger(__name__)


def omega_grid(omegas: tuple[float, ...], start: float | None, stop: float | None, points: int) -> list[float]:
    if omegas:
        if start is not None or stop is not None:
            raise click.UsageError("use either --omega-sigma values or --omega-from/--omega-to, not both")
        return [float(w) for w in omegas]
    if start is None or stop is None:
        raise click.UsageError("give --omega-sigma (repeatable) or both --omega-from and --omega-to")
    if not start < stop:
        raise click.UsageError(f"--omega-from must be < --omega-to, got {start} .. {stop}")
    return [float(w) for w in np.linspace(start, stop, points)]


@click.command("lmax")
@scenario_option
@click.option("--a-sigma", type=click.FloatRange(min=0), default=None, help="Required for accelerated scenarios.")
@click.option("--omega-sigma", "omegas", type=float, multiple=True, help="Gap value; repeat for several rows.")
@click.option("--omega-from", type=float, default=None)
@click.option("--omega-to", type=float, default=None)
@click.option("--omega-points", type=click.IntRange(min=2), default=100, show_default=True)
@click.option("--l-hi", type=click.FloatRange(min=0, min_open=True), default=settings.L_HI, show_default=True)
@tol_option
@format_option
@out_option
@jobs_option
def lmax_cmd(
    scenario: str,
    a_sigma: float | None,
    omegas: tuple[float, ...],
    omega_from: float | None,
    omega_to: float | None,
    omega_points: int,
    l_hi: float,
    tol: float,
    fmt: str,
    out: Path | None,
    jobs: int | None,
) -> None:
    """Maximum harvesting-achievable separation for each gap; no-entanglement rows get l_max = 0."""
    scen = Scenario(scenario.lower())
    if scen.accelerated and a_sigma is None:
        raise click.UsageError(f"--a-sigma is required for the {scen.value} scenario")
    grid = omega_grid(omegas, omega_from, omega_to, omega_points)

    rows = rangefinder.lmax_curve(
        scen, a_sigma or 0.0, grid, l_hi, tol, jobs=jobs, progress=run_context().progress
    )
    manifest = run_context().manifest(
        tol,
        lmax={
            "l_lo": settings.L_LO,
            "l_hi": l_hi,
            "scan_points": settings.LMAX_SCAN_POINTS,
            "scan_max": settings.LMAX_SCAN_MAX,
            "bracket": settings.LMAX_BRACKET,
        },
    )
    emit(output.render("lmax", rows, fmt, manifest), out, manifest)
    bad = sum(row.result.status == "nonconverged" for row in rows)
    if bad:
        raise NonConvergenceError(f"L_max at {bad} of {len(rows)} gap value(s)", float("inf"), tol)
