import math

import numpy as np
import pytest
from scipy import optimize

from harvest.config import settings
from harvest.errors import BracketEscapeError, NoEntanglementError, ValidationError
from harvest.schemas import PhysicalConfig, Scenario, SweepSpec
from harvest.services import observables, rangefinder
from harvest.services.observables import transition_probability_rest, x_rest


def _inertial_margin(l: float, omega: float) -> float:
    return abs(x_rest(PhysicalConfig(omega_sigma=omega, l_sigma=l))) - transition_probability_rest(omega)


def _inertial_l_max(omega: float) -> float:
    grid = np.linspace(settings.L_LO, settings.L_HI, 2000)
    values = [_inertial_margin(l, omega) for l in grid]
    last = max(i for i in range(len(grid) - 1) if values[i] > 0 >= values[i + 1])
    return optimize.brentq(_inertial_margin, grid[last], grid[last + 1], args=(omega,), xtol=1e-12)


def test_inertial_separation_sweep_does_not_increase():
    spec = SweepSpec(scenario=Scenario.INERTIAL, vary="l_sigma", start=0.5, stop=2.0, points=4)

    records = rangefinder.sweep(spec, jobs=1, progress=False)

    assert [r.cfg.l_sigma for r in records] == [0.5, 1.0, 1.5, 2.0]
    values = [r.concurrence for r in records]
    assert values[0] > values[1] > 0.0
    assert all(b <= a for a, b in zip(values, values[1:]))


def test_two_point_sweep_hits_both_endpoints():
    spec = SweepSpec(scenario=Scenario.INERTIAL, vary="omega_sigma", start=0.1, stop=3.0, points=2)

    records = rangefinder.sweep(spec, jobs=1, progress=False)

    assert [r.cfg.omega_sigma for r in records] == [0.1, 3.0]


def test_sweep_spec_rejects_reversed_range():
    with pytest.raises(ValueError):
        SweepSpec(scenario=Scenario.INERTIAL, vary="l_sigma", start=2.0, stop=1.0, points=3)


def test_worker_pool_keeps_grid_order():
    spec = SweepSpec(scenario=Scenario.INERTIAL, vary="l_sigma", start=0.2, stop=3.0, points=7)

    serial = rangefinder.sweep(spec, jobs=1, progress=False)
    pooled = rangefinder.sweep(spec, jobs=2, progress=False)

    assert pooled == serial


@pytest.mark.parametrize("omega", [0.01, 0.5, 2.0])
def test_inertial_l_max_matches_dense_closed_form_scan(omega):
    result = rangefinder.l_max(Scenario.INERTIAL, 0.0, omega)

    assert result.status == "ok"
    assert result.bracket_width <= settings.LMAX_BRACKET
    assert result.l_max_sigma == pytest.approx(_inertial_l_max(omega), abs=2 * settings.LMAX_BRACKET)
    assert result.evaluations >= settings.LMAX_SCAN_POINTS


def test_inertial_l_max_grows_with_gap():
    rows = rangefinder.lmax_curve(Scenario.INERTIAL, 0.0, [0.5, 1.0, 2.0], jobs=1, progress=False)

    values = [row.result.l_max_sigma for row in rows]
    assert [row.omega_sigma for row in rows] == [0.5, 1.0, 2.0]
    assert values[0] <= values[1] <= values[2]


def test_l_max_is_deterministic():
    first = rangefinder.l_max(Scenario.INERTIAL, 0.0, 0.3)
    second = rangefinder.l_max(Scenario.INERTIAL, 0.0, 0.3)

    assert first == second


def test_no_entanglement_on_scan_raises(monkeypatch):
    monkeypatch.setattr(settings, "L_LO", 5.0)

    with pytest.raises(NoEntanglementError):
        rangefinder.l_max(Scenario.INERTIAL, 0.0, 0.0, l_hi=6.0)


def test_no_entanglement_resolves_to_zero(monkeypatch):
    monkeypatch.setattr(settings, "L_LO", 5.0)

    result = rangefinder.l_max_resolved(Scenario.INERTIAL, 0.0, 0.0, l_hi=6.0)

    assert result.status == "no_entanglement"
    assert result.l_max_sigma == 0.0


def test_positive_margin_at_upper_end_raises():
    with pytest.raises(BracketEscapeError):
        rangefinder.l_max(Scenario.INERTIAL, 0.0, 0.0, l_hi=1.0)


def test_resolved_search_doubles_upper_end():
    result = rangefinder.l_max_resolved(Scenario.INERTIAL, 0.0, 0.0, l_hi=0.4)

    assert result.l_hi == pytest.approx(1.6)
    assert result.l_max_sigma == pytest.approx(_inertial_l_max(0.0), abs=2 * settings.LMAX_BRACKET)


def test_resolved_search_gives_up_after_retries():
    with pytest.raises(BracketEscapeError):
        rangefinder.l_max_resolved(Scenario.INERTIAL, 0.0, 0.0, l_hi=0.2, retries=1)


def _flag_every_evaluation(monkeypatch):
    evaluate = observables.evaluate

    def flagged(scenario, cfg, tol=None):
        return evaluate(scenario, cfg, tol).model_copy(update={"status": "nonconverged"})

    monkeypatch.setattr(observables, "evaluate", flagged)


def test_unconverged_evaluations_mark_the_range(monkeypatch):
    _flag_every_evaluation(monkeypatch)

    result = rangefinder.l_max(Scenario.INERTIAL, 0.0, 0.5)

    assert result.status == "nonconverged"
    assert result.l_max_sigma == pytest.approx(_inertial_l_max(0.5), abs=2 * settings.LMAX_BRACKET)


def test_unconverged_scan_without_positive_margin_is_not_no_entanglement(monkeypatch):
    monkeypatch.setattr(settings, "L_LO", 5.0)
    _flag_every_evaluation(monkeypatch)

    result = rangefinder.l_max_resolved(Scenario.INERTIAL, 0.0, 0.0, l_hi=6.0)

    assert result.status == "nonconverged"
    assert result.l_max_sigma == 0.0


def test_non_finite_gap_grid_rejected():
    with pytest.raises(ValidationError):
        rangefinder.lmax_curve(Scenario.INERTIAL, 0.0, [0.5, math.nan], jobs=1, progress=False)


@pytest.mark.slow
def test_small_acceleration_sweep_starts_at_rest_value():
    spec = SweepSpec(
        scenario=Scenario.PARALLEL, vary="a_sigma", start=1e-4, stop=1e-3, points=2, omega_sigma=0.5, l_sigma=1.0
    )

    first = rangefinder.sweep(spec, jobs=1, progress=False)[0]

    rest = PhysicalConfig(omega_sigma=0.5, l_sigma=1.0)
    assert first.status == "ok"
    assert first.abs_x == pytest.approx(abs(x_rest(rest)), rel=1e-6)


@pytest.mark.slow
def test_parallel_range_exceeds_inertial_at_large_gap():
    inertial = rangefinder.l_max(Scenario.INERTIAL, 0.0, 3.0)
    parallel = rangefinder.l_max_resolved(Scenario.PARALLEL, 1.0, 3.0)

    assert parallel.l_max_sigma > inertial.l_max_sigma


@pytest.mark.slow
@pytest.mark.parametrize("scenario", [Scenario.ANTIPARALLEL, Scenario.PERPENDICULAR])
def test_transverse_and_opposed_ranges_stay_below_inertial(scenario):
    inertial = rangefinder.l_max(Scenario.INERTIAL, 0.0, 3.0)

    result = rangefinder.l_max_resolved(scenario, 1.0, 3.0)

    assert result.l_max_sigma < inertial.l_max_sigma


@pytest.mark.slow
def test_parallel_and_antiparallel_curves_cross_at_small_gap():
    def curve(scenario):
        spec = SweepSpec(
            scenario=scenario, vary="l_sigma", start=0.2, stop=4.0, points=20, a_sigma=0.5, omega_sigma=0.01
        )
        return [r.concurrence for r in rangefinder.sweep(spec, jobs=1, progress=False)]

    diff = [p - q for p, q in zip(curve(Scenario.PARALLEL), curve(Scenario.ANTIPARALLEL))]

    assert any((d1 > 0) != (d2 > 0) for d1, d2 in zip(diff, diff[1:]))


def _ranges(a_sigma: float, omega: float) -> dict[Scenario, float]:
    out = {}
    for scenario in Scenario:
        result = rangefinder.l_max_resolved(scenario, a_sigma, omega)
        assert result.status == "ok"
        out[scenario] = result.l_max_sigma
    return out


@pytest.mark.slow
def test_rest_has_the_longest_range_at_small_gap_and_acceleration():
    ranges = _ranges(0.01, 0.01)

    rest = ranges.pop(Scenario.INERTIAL)
    assert all(rest >= value for value in ranges.values())


@pytest.mark.slow
def test_some_gap_favours_only_parallel_acceleration_at_unit_acceleration():
    def parallel_alone_beats_rest(omega):
        r = _ranges(1.0, omega)
        rest = r[Scenario.INERTIAL]
        return r[Scenario.PARALLEL] > rest and r[Scenario.ANTIPARALLEL] < rest and r[Scenario.PERPENDICULAR] < rest

    assert any(parallel_alone_beats_rest(omega) for omega in (3.0, 2.5, 2.0, 1.5))


@pytest.mark.slow
def test_large_gap_lets_every_weak_acceleration_reach_the_rest_range():
    def all_reach_rest(omega):
        r = _ranges(0.01, omega)
        rest = r.pop(Scenario.INERTIAL)
        return all(value >= rest for value in r.values())

    assert any(all_reach_rest(omega) for omega in (4.0, 3.5, 3.0))
