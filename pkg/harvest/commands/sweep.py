# harvest/commands/sweep.py
from __future__ import annotations

import logging
from pathlib import Path

import click

from harvest.commands._options import (
    emit,
    format_option,
    jobs_option,
    out_option,
    run_context,
    scenario_option,
    sweep_manifest,
    tol_option,
)
from harvest.errors import NonConvergenceError
from harvest.schemas import Scenario, SweepSpec
from harvest.services import output, rangefinder

logger = logging.getLogger(__name__)


@click.command("sweep")
@scenario_option
@click.option("--vary", type=click.Choice(["l_sigma", "a_sigma", "omega_sigma"]), required=True)
@click.option("--from", "start", type=float, required=True, help="First grid value (inclusive).")
@click.option("--to", "stop", type=float, required=True, help="Last grid value (inclusive).")
@click.option("--points", type=click.IntRange(min=2), default=100, show_default=True)
@click.option("--a-sigma", type=float, default=0.0, show_default=True)
@click.option("--omega-sigma", type=float, default=0.0, show_default=True)
@click.option("--l-sigma", type=float, default=1.0, show_default=True)
@tol_option
@format_option
@out_option
@jobs_option
def sweep_cmd(
    scenario: str,
    vary: str,
    start: float,
    stop: float,
    points: int,
    a_sigma: float,
    omega_sigma: float,
    l_sigma: float,
    tol: float,
    fmt: str,
    out: Path | None,
    jobs: int | None,
) -> None:
    """Observables on a uniform grid over one parameter; exits 2 after writing if any row did not converge."""
    spec = SweepSpec(
        scenario=Scenario(scenario.lower()),
        vary=vary,
        start=start,
        stop=stop,
        points=points,
        a_sigma=a_sigma,
        omega_sigma=omega_sigma,
        l_sigma=l_sigma,
        tol=tol,
    )
    records = rangefinder.sweep(spec, jobs=jobs, progress=run_context().progress)
    manifest = sweep_manifest(spec)
    emit(output.render("records", records, fmt, manifest), out, manifest)
    bad = [r for r in records if r.status != "ok"]
    if bad:
        worst = max(max(r.p_err, r.x_err) for r in bad)
        raise NonConvergenceError(f"{len(bad)} of {len(records)} sweep point(s)", worst, tol)
