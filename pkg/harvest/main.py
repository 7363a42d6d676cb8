# harvest/main.py
"""
Command-line entry point.

Exit codes: 0 success, 1 argument / validation error, 2 numerical non-convergence.
"""

from __future__ import annotations

import logging
import sys
from collections.abc import Sequence

import click
import pydantic
from dotenv import dotenv_values

from harvest import __version__
from harvest.commands import evaluate as evaluate_command
from harvest.commands import figure as figure_command
from harvest.commands import lmax as lmax_command
from harvest.commands import sweep as sweep_command
from harvest.commands._options import RunContext
from harvest.config import settings
from harvest.errors import HarvestError, ValidationError

logger = logging.getLogger(__name__)

COMMANDS = [
    evaluate_command.evaluate_cmd,
    sweep_command.sweep_cmd,
    lmax_command.lmax_cmd,
    figure_command.figure_cmd,
]

# option spellings whose click parameter name differs
_FLAG_NAMES = {"format": "fmt", "from": "start", "to": "stop"}

# run-file keys a single command stores under another name; lmax takes a list of gaps
_COMMAND_NAMES = {"lmax": {"omega_sigma": "omegas"}}


def _for_command(name: str, values: dict[str, str]) -> dict[str, object]:
    renames = _COMMAND_NAMES.get(name, {})
    out: dict[str, object] = {}
    for key, value in values.items():
        key = renames.get(key, key)
        out[key] = tuple(value.replace(",", " ").split()) if key == "omegas" else value
    return out


def load_run_config(path: str) -> dict[str, dict[str, object]]:
    """
    `key = value` run file -> click default_map for every command.

    Keys are option names with `-` or `_` (`a-sigma = 0.5`); flags given on the command
    line still win. Keys no command knows are rejected. For `lmax`, `omega_sigma` may
    list several gaps separated by commas or spaces.
    """
    values = {k.strip().replace("-", "_").lower(): v for k, v in dotenv_values(path).items() if v is not None}
    known = {p.name for cmd in COMMANDS for p in cmd.params if isinstance(p, click.Option)}
    unknown = sorted(set(values) - known - set(_FLAG_NAMES))
    if unknown:
        raise ValidationError(f"unknown keys in {path}: {', '.join(unknown)}")
    values = {_FLAG_NAMES.get(k, k): v for k, v in values.items()}
    return {cmd.name: _for_command(cmd.name, values) for cmd in COMMANDS}


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="harvest")
@click.option(
    "--config",
    "config_file",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Run file with `key = value` lines supplying option defaults.",
)
@click.option("--log-level", default=settings.LOG_LEVEL, show_default=True, help="Logging level (stderr).")
@click.option("--progress/--no-progress", default=settings.PROGRESS, show_default=True, help="Progress bars on stderr.")
@click.pass_context
def cli(ctx: click.Context, config_file: str | None, log_level: str, progress: bool) -> None:
    """Entanglement harvesting by uniformly accelerated detectors."""
    logging.basicConfig(
        level=getattr(logging, log_level.upper(), logging.WARNING),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    if config_file:
        ctx.default_map = load_run_config(config_file)
        logger.info("option defaults from %s", config_file)
    obj = ctx.ensure_object(RunContext)
    obj.progress = progress


for _command in COMMANDS:
    cli.add_command(_command)


def run(argv: Sequence[str] | None = None) -> int:
    """Run the CLI and return its exit code instead of exiting."""
    args = list(sys.argv[1:] if argv is None else argv)
    try:
        cli.main(args=args, prog_name="harvest", standalone_mode=False, obj=RunContext(argv=args))
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except pydantic.ValidationError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except HarvestError as exc:
        click.echo(f"error: {exc}", err=True)
        return exc.exit_code
    return 0


def main() -> None:
    sys.exit(run())
