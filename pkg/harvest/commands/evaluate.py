# harvest/commands/evaluate.py
from __future__ import annotations

import logging
from pathlib import Path

import click

from harvest.commands._options import emit, format_option, out_option, run_context, scenario_option, tol_option
from harvest.errors import NonConvergenceError
from harvest.schemas import PhysicalConfig, Scenario
from harvest.services import observables, output

logger = logging.getLogger(__name__)


@click.command("eval")
@scenario_option
@click.option("--a-sigma", type=float, default=0.0, show_default=True, help="Acceleration x duration.")
@click.option("--omega-sigma", type=float, default=0.0, show_default=True, help="Energy gap x duration.")
@click.option("--l-sigma", type=float, required=True, help="Separation / duration.")
@tol_option
@format_option
@out_option
def evaluate_cmd(
    scenario: str,
    a_sigma: float,
    omega_sigma: float,
    l_sigma: float,
    tol: float,
    fmt: str,
    out: Path | None,
) -> None:
    """Observables at a single point."""
    cfg = PhysicalConfig(a_sigma=a_sigma, omega_sigma=omega_sigma, l_sigma=l_sigma)
    rec = observables.evaluate(Scenario(scenario.lower()), cfg, tol)
    manifest = run_context().manifest(tol)
    emit(output.render("records", [rec], fmt, manifest), out, manifest)
    if rec.status != "ok":
        raise NonConvergenceError(f"{rec.scenario.value} observables", max(rec.p_err, rec.x_err), tol)
