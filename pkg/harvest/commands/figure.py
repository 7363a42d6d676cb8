# harvest/commands/figure.py
from __future__ import annotations

import logging
from pathlib import Path

import click

from harvest.commands._options import jobs_option, run_context, sweep_manifest, tol_option
from harvest.config import settings
from harvest.errors import NonConvergenceError
from harvest.services import output, presets, rangefinder

logger = logging.getLogger(__name__)


@click.command("figure")
@click.argument("preset", type=click.Choice(sorted(presets.PRESETS)))
@click.option(
    "--out-dir",
    type=click.Path(file_okay=False, path_type=Path),
    default=Path("."),
    show_default=True,
    help="Directory for <preset>_<scenario>.csv files.",
)
@tol_option
@jobs_option
def figure_cmd(preset: str, out_dir: Path, tol: float, jobs: int | None) -> None:
    """Reproduce one figure panel as CSV curves (three scenarios plus the rest baseline)."""
    fig = presets.get_preset(preset)
    ctx = run_context()
    failed = 0

    if fig.kind == "sweep":
        for spec in fig.sweep_specs(tol):
            records = rangefinder.sweep(spec, jobs=jobs, progress=ctx.progress)
            failed += sum(r.status != "ok" for r in records)
            path = out_dir / f"{fig.name}_{spec.scenario.value}.csv"
            output.write_output(path, output.records_to_csv(records), sweep_manifest(spec, preset=fig.name))
            click.echo(str(path), err=True)
    else:
        omegas = fig.omega_grid()
        for scenario in fig.scenarios:
            rows = rangefinder.lmax_curve(scenario, fig.a_sigma, omegas, None, tol, jobs=jobs, progress=ctx.progress)
            path = out_dir / f"{fig.name}_{scenario.value}.csv"
            manifest = ctx.manifest(
                tol,
                preset=fig.name,
                lmax={
                    "a_sigma": fig.a_sigma,
                    "omega_from": fig.start,
                    "omega_to": fig.stop,
                    "omega_points": fig.points,
                    "l_lo": settings.L_LO,
                    "l_hi": settings.L_HI,
                    "scan_points": settings.LMAX_SCAN_POINTS,
                    "bracket": settings.LMAX_BRACKET,
                },
            )
            failed += sum(row.result.status == "nonconverged" for row in rows)
            output.write_output(path, output.lmax_to_csv(rows), manifest)
            click.echo(str(path), err=True)

    if failed:
        raise NonConvergenceError(f"{failed} point(s) of {fig.name}", float("inf"), tol)
