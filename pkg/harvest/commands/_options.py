# harvest/commands/_options.py
"""Option decorators and output plumbing shared by the commands."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import click

from harvest import __version__
from harvest.config import settings
from harvest.schemas import RunManifest, Scenario, SweepSpec
from harvest.services import output

SCENARIOS = [s.value for s in Scenario]


@dataclass
class RunContext:
    argv: list[str] = field(default_factory=list)
    progress: bool = True
    started: float = field(default_factory=time.perf_counter)

    def manifest(self, tol: float, **extra) -> RunManifest:
        return RunManifest(
            command=" ".join(["harvest", *self.argv]),
            tool_version=__version__,
            tol=tol,
            inner_tol=tol * settings.INNER_TOL / settings.TOL,
            a_min=settings.A_MIN,
            wall_time_s=round(time.perf_counter() - self.started, 3),
            **extra,
        )


def run_context() -> RunContext:
    ctx = click.get_current_context()
    obj = ctx.find_object(RunContext)
    return obj if obj is not None else RunContext()


# ---------------------------
# Decorators
# ---------------------------


def scenario_option(f):
    return click.option(
        "--scenario",
        type=click.Choice(SCENARIOS, case_sensitive=False),
        required=True,
        help="Acceleration scenario.",
    )(f)


def tol_option(f):
    return click.option(
        "--tol",
        type=click.FloatRange(min=0, min_open=True),
        default=settings.TOL,
        show_default=True,
        help="Absolute tolerance of the outer integrals.",
    )(f)


def format_option(f):
    return click.option(
        "--format",
        "fmt",
        type=click.Choice(["csv", "json"]),
        default="csv",
        show_default=True,
    )(f)


def out_option(f):
    return click.option(
        "--out",
        type=click.Path(dir_okay=False, path_type=Path),
        default=None,
        help="Write here (plus a .manifest.json sidecar) instead of standard output.",
    )(f)


def jobs_option(f):
    return click.option(
        "--jobs",
        type=click.IntRange(min=1),
        default=None,
        help="Worker processes (default: HARVEST_JOBS, else the CPU count).",
    )(f)


# ---------------------------
# Output
# ---------------------------


def emit(text: str, out: Path | None, manifest: RunManifest) -> None:
    """Standard output stays machine-clean: only the serialized payload goes there."""
    if out is None:
        click.echo(text, nl=False)
    else:
        output.write_output(out, text, manifest)


def sweep_manifest(spec: SweepSpec, **extra) -> RunManifest:
    return run_context().manifest(spec.tol, sweep=spec, **extra)
