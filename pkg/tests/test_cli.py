import json
import math

import pytest

from harvest.main import run
from harvest.schemas import Scenario
from harvest.services import observables, output, presets
from harvest.services.presets import FigurePreset

QUIET = ["--no-progress"]


@pytest.fixture
def unconverged(monkeypatch):
    """Every evaluation reports non-convergence while keeping its numbers."""
    evaluate = observables.evaluate

    def flagged(scenario, cfg, tol=None):
        return evaluate(scenario, cfg, tol).model_copy(update={"status": "nonconverged"})

    monkeypatch.setattr(observables, "evaluate", flagged)


def _run(capsys, *args: str) -> tuple[int, str]:
    code = run([*QUIET, *args])
    return code, capsys.readouterr().out


def test_eval_inertial_prints_single_record(capsys):
    code, out = _run(capsys, "eval", "--scenario", "inertial", "--omega-sigma", "0", "--l-sigma", "1")

    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == ",".join(output.RECORD_COLUMNS)
    (rec,) = output.records_from_csv(out)
    assert rec.concurrence == pytest.approx(0.0988, abs=2e-4)


def test_eval_json_output(capsys):
    code, out = _run(capsys, "eval", "--scenario", "inertial", "--l-sigma", "1", "--format", "json")

    payload = json.loads(out)
    assert code == 0
    assert payload["records"][0]["p"] == pytest.approx(1.0 / (4.0 * math.pi), rel=1e-15)
    assert payload["manifest"]["command"].startswith("harvest")


def test_accelerated_eval_without_acceleration_exits_one(capsys):
    code, _ = _run(capsys, "eval", "--scenario", "parallel", "--a-sigma", "0", "--l-sigma", "1")

    assert code == 1


def test_unknown_scenario_exits_one(capsys):
    code, _ = _run(capsys, "eval", "--scenario", "sideways", "--l-sigma", "1")

    assert code == 1


def test_non_positive_separation_exits_one(capsys):
    code, _ = _run(capsys, "eval", "--scenario", "inertial", "--l-sigma", "0")

    assert code == 1


def test_sweep_csv_is_byte_identical_across_runs(capsys):
    args = ["sweep", "--scenario", "inertial", "--vary", "l_sigma", "--from", "0.5", "--to", "2", "--points", "4"]

    code, first = _run(capsys, *args, "--jobs", "1")
    _, second = _run(capsys, *args, "--jobs", "2")

    assert code == 0
    assert len(first.strip().split("\n")) == 5
    assert first == second


def test_sweep_json_numbers_equal_csv_numbers(capsys):
    args = ["sweep", "--scenario", "inertial", "--vary", "omega_sigma", "--from", "0", "--to", "1", "--points", "3"]

    _, csv_text = _run(capsys, *args, "--jobs", "1")
    _, json_text = _run(capsys, *args, "--jobs", "1", "--format", "json")

    records = output.records_from_csv(csv_text)
    rows = json.loads(json_text)["records"]
    assert [r["concurrence"] for r in rows] == [r.concurrence for r in records]
    assert [r["re_x"] for r in rows] == [r.re_x for r in records]


def test_sweep_to_file_writes_manifest(tmp_path, capsys):
    path = tmp_path / "sweep.csv"

    code, out = _run(
        capsys,
        "sweep",
        "--scenario",
        "inertial",
        "--vary",
        "l_sigma",
        "--from",
        "0.5",
        "--to",
        "1",
        "--points",
        "2",
        "--jobs",
        "1",
        "--out",
        str(path),
    )

    assert code == 0
    assert out == ""
    text = path.read_text()
    assert output.records_to_csv(output.records_from_csv(text)) == text
    manifest = json.loads(output.manifest_path(path).read_text())
    assert manifest["sweep"]["points"] == 2
    assert manifest["sweep"]["vary"] == "l_sigma"


def test_lmax_inertial_rows(capsys):
    code, out = _run(
        capsys,
        "lmax",
        "--scenario",
        "inertial",
        "--omega-sigma",
        "0.5",
        "--omega-sigma",
        "1",
        "--omega-sigma",
        "2",
        "--jobs",
        "1",
    )

    rows = output.lmax_from_csv(out)
    assert code == 0
    assert [r.omega_sigma for r in rows] == [0.5, 1.0, 2.0]
    assert rows[0].result.l_max_sigma <= rows[1].result.l_max_sigma <= rows[2].result.l_max_sigma


def test_lmax_accelerated_needs_acceleration(capsys):
    code, _ = _run(capsys, "lmax", "--scenario", "parallel", "--omega-sigma", "1")

    assert code == 1


def test_lmax_needs_a_gap_grid(capsys):
    code, _ = _run(capsys, "lmax", "--scenario", "inertial")

    assert code == 1


def test_run_file_supplies_defaults(tmp_path, capsys):
    run_file = tmp_path / "run.env"
    run_file.write_text("scenario = inertial\nl-sigma = 1\nomega_sigma = 0\n")

    code = run([*QUIET, "--config", str(run_file), "eval"])
    out = capsys.readouterr().out

    assert code == 0
    (rec,) = output.records_from_csv(out)
    assert rec.cfg.l_sigma == 1.0


def test_command_line_beats_run_file(tmp_path, capsys):
    run_file = tmp_path / "run.env"
    run_file.write_text("scenario = inertial\nl_sigma = 1\n")

    run([*QUIET, "--config", str(run_file), "eval", "--l-sigma", "2"])
    (rec,) = output.records_from_csv(capsys.readouterr().out)

    assert rec.cfg.l_sigma == 2.0


def test_run_file_unknown_key_exits_one(tmp_path, capsys):
    run_file = tmp_path / "run.env"
    run_file.write_text("scenario = inertial\nspeed_of_light = 2\n")

    assert run([*QUIET, "--config", str(run_file), "eval"]) == 1


def test_unknown_figure_exits_one(capsys):
    code, _ = _run(capsys, "figure", "fig9z")

    assert code == 1


def test_figure_writes_one_file_per_scenario(tmp_path, capsys, monkeypatch):
    tiny = FigurePreset(
        name="fig2a",
        kind="sweep",
        vary="l_sigma",
        start=0.5,
        stop=1.0,
        a_sigma=0.5,
        omega_sigma=0.01,
        points=3,
        scenarios=(Scenario.INERTIAL,),
    )
    monkeypatch.setitem(presets.PRESETS, "fig2a", tiny)

    code, _ = _run(capsys, "figure", "fig2a", "--out-dir", str(tmp_path), "--jobs", "1")

    assert code == 0
    path = tmp_path / "fig2a_inertial.csv"
    assert len(output.records_from_csv(path.read_text())) == 3
    assert output.manifest_path(path).exists()


def test_range_figure_writes_lmax_file(tmp_path, capsys, monkeypatch):
    tiny = FigurePreset(
        name="fig5a",
        kind="lmax",
        vary="omega_sigma",
        start=0.5,
        stop=1.0,
        a_sigma=0.01,
        points=2,
        scenarios=(Scenario.INERTIAL,),
    )
    monkeypatch.setitem(presets.PRESETS, "fig5a", tiny)

    code, _ = _run(capsys, "figure", "fig5a", "--out-dir", str(tmp_path), "--jobs", "1")

    rows = output.lmax_from_csv((tmp_path / "fig5a_inertial.csv").read_text())
    assert code == 0
    assert [r.omega_sigma for r in rows] == [0.5, 1.0]


def test_version_flag(capsys):
    code, out = _run(capsys, "--version")

    assert code == 0
    assert "harvest" in out


def test_sweep_with_unconverged_points_writes_rows_then_exits_two(capsys, unconverged):
    code, out = _run(
        capsys,
        "sweep",
        "--scenario",
        "inertial",
        "--vary",
        "l_sigma",
        "--from",
        "0.5",
        "--to",
        "2",
        "--points",
        "4",
        "--jobs",
        "1",
    )

    records = output.records_from_csv(out)
    assert code == 2
    assert len(records) == 4
    assert all(r.status == "nonconverged" for r in records)


def test_lmax_with_unconverged_evaluations_exits_two(capsys, unconverged):
    code, out = _run(capsys, "lmax", "--scenario", "inertial", "--omega-sigma", "0.5", "--jobs", "1")

    (row,) = output.lmax_from_csv(out)
    assert code == 2
    assert row.result.status == "nonconverged"


def test_range_figure_with_unconverged_evaluations_exits_two(tmp_path, capsys, monkeypatch, unconverged):
    tiny = FigurePreset(
        name="fig5a",
        kind="lmax",
        vary="omega_sigma",
        start=0.5,
        stop=1.0,
        a_sigma=0.01,
        points=2,
        scenarios=(Scenario.INERTIAL,),
    )
    monkeypatch.setitem(presets.PRESETS, "fig5a", tiny)

    code, _ = _run(capsys, "figure", "fig5a", "--out-dir", str(tmp_path), "--jobs", "1")

    rows = output.lmax_from_csv((tmp_path / "fig5a_inertial.csv").read_text())
    assert code == 2
    assert {r.result.status for r in rows} == {"nonconverged"}


def test_run_file_gap_list_feeds_lmax(tmp_path, capsys):
    run_file = tmp_path / "run.env"
    run_file.write_text("scenario = inertial\nomega_sigma = 0.5, 1\n")

    code = run([*QUIET, "--config", str(run_file), "lmax", "--jobs", "1"])
    rows = output.lmax_from_csv(capsys.readouterr().out)

    assert code == 0
    assert [r.omega_sigma for r in rows] == [0.5, 1.0]


def test_run_file_single_gap_still_feeds_eval(tmp_path, capsys):
    run_file = tmp_path / "run.env"
    run_file.write_text("scenario = inertial\nomega_sigma = 0.5\nl_sigma = 1\n")

    code = run([*QUIET, "--config", str(run_file), "eval"])
    (rec,) = output.records_from_csv(capsys.readouterr().out)

    assert code == 0
    assert rec.cfg.omega_sigma == 0.5
