import pytest

from harvest.errors import ValidationError
from harvest.schemas import Scenario
from harvest.services.presets import PRESETS, get_preset

GAPS = (0.01, 0.50, 2.00)


def test_every_panel_has_a_preset():
    assert sorted(PRESETS) == [
        "fig2a",
        "fig2b",
        "fig2c",
        "fig3a",
        "fig3b",
        "fig3c",
        "fig4a",
        "fig4b",
        "fig4c",
        "fig5a",
        "fig5b",
    ]


def test_separation_panels_fix_acceleration_and_gap():
    for suffix, gap in zip("abc", GAPS):
        fig = get_preset(f"fig2{suffix}")
        assert fig.kind == "sweep"
        assert fig.vary == "l_sigma"
        assert fig.a_sigma == 0.5
        assert fig.omega_sigma == gap


def test_acceleration_panels_fix_separation_and_gap():
    for suffix, gap in zip("abc", GAPS):
        fig = get_preset(f"fig3{suffix}")
        assert fig.vary == "a_sigma"
        assert fig.l_sigma == 0.5
        assert fig.omega_sigma == gap
        assert fig.start > 0.0


def test_gap_panels_fix_acceleration_and_separation():
    for suffix, l in zip("abc", (0.20, 0.50, 2.00)):
        fig = get_preset(f"fig4{suffix}")
        assert fig.vary == "omega_sigma"
        assert fig.a_sigma == 0.5
        assert fig.l_sigma == l


def test_range_panels():
    assert get_preset("fig5a").kind == "lmax"
    assert get_preset("fig5a").a_sigma == 0.01
    assert get_preset("fig5b").a_sigma == 1.0


def test_sweep_specs_cover_all_scenarios_with_dense_grid():
    specs = get_preset("fig2b").sweep_specs(1e-9)

    assert [s.scenario for s in specs] == list(Scenario)
    assert all(s.points >= 100 for s in specs)
    assert all(s.tol == 1e-9 for s in specs)


def test_range_preset_is_not_a_sweep():
    with pytest.raises(ValidationError):
        get_preset("fig5a").sweep_specs(1e-9)
    assert len(get_preset("fig5b").omega_grid()) == 100


def test_unknown_preset_rejected():
    with pytest.raises(ValidationError):
        get_preset("fig9z")
