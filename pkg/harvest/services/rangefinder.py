# harvest/services/rangefinder.py
"""
Parameter sweeps and the harvesting-achievable range L_max.

L_max is the outermost separation at which f(L) = |X| - P changes from positive to
non-positive: a geometric scan over [L_LO, l_hi] (densified while sign changes sit in
adjacent cells) followed by bisection of the last sign change.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Any

import numpy as np
from tqdm import tqdm

from harvest.config import settings
from harvest.errors import BracketEscapeError, NoEntanglementError, ValidationError
from harvest.schemas import LmaxRow, ObservableRecord, PhysicalConfig, RangeResult, Scenario, SweepSpec
from harvest.services import observables

logger = logging.getLogger(__name__)


# ---------------------------
# Worker pool
# ---------------------------


def _run_ordered(
    fn: Callable[[Any], Any],
    tasks: Sequence[Any],
    *,
    jobs: int | None,
    progress: bool | None,
    desc: str,
) -> list[Any]:
    """fn over tasks, results in task order whatever the completion order."""
    jobs = settings.default_jobs() if jobs is None else max(1, int(jobs))
    show = settings.PROGRESS if progress is None else progress
    results: list[Any] = [None] * len(tasks)

    if jobs == 1 or len(tasks) <= 1:
        for i, task in enumerate(tqdm(tasks, desc=desc, disable=not show, leave=False)):
            results[i] = fn(task)
        return results

    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as executor:
        futures = {executor.submit(fn, task): i for i, task in enumerate(tasks)}
        for fut in tqdm(as_completed(futures), total=len(tasks), desc=desc, disable=not show, leave=False):
            results[futures[fut]] = fut.result()
    return results


def _evaluate_task(task: tuple[Scenario, PhysicalConfig, float]) -> ObservableRecord:
    scenario, cfg, tol = task
    return observables.evaluate(scenario, cfg, tol)


# ---------------------------
# Sweeps
# ---------------------------


def sweep(spec: SweepSpec, *, jobs: int | None = None, progress: bool | None = None) -> list[ObservableRecord]:
    """One record per grid point, in grid order; non-converged points are flagged, not raised."""
    tasks = [(spec.scenario, cfg, spec.tol) for cfg in spec.configs()]
    logger.info("sweep %s over %s: %d points", spec.scenario.value, spec.vary, len(tasks))
    return _run_ordered(_evaluate_task, tasks, jobs=jobs, progress=progress, desc=f"{spec.scenario.value}")


# ---------------------------
# L_max
# ---------------------------


class _Harvest:
    """f(L) = |X| - P at fixed (scenario, a, omega), counting evaluations and non-converged ones."""

    def __init__(self, scenario: Scenario, a_sigma: float, omega_sigma: float, tol: float):
        self.scenario = scenario
        self.a_sigma = a_sigma
        self.omega_sigma = omega_sigma
        self.tol = tol
        self.evaluations = 0
        self.failures = 0

    def __call__(self, l_sigma: float) -> float:
        self.evaluations += 1
        cfg = PhysicalConfig(a_sigma=self.a_sigma, omega_sigma=self.omega_sigma, l_sigma=float(l_sigma))
        rec = observables.evaluate(self.scenario, cfg, self.tol)
        if rec.status != "ok":
            self.failures += 1
        return rec.abs_x - rec.p

    @property
    def status(self) -> str:
        return "ok" if self.failures == 0 else "nonconverged"


def _refine_grid(grid: np.ndarray) -> np.ndarray:
    """Insert the geometric midpoint of every cell; old points keep their exact values."""
    mids = np.sqrt(grid[:-1] * grid[1:])
    out = np.empty(2 * grid.size - 1)
    out[0::2] = grid
    out[1::2] = mids
    return out


def l_max(
    scenario: Scenario,
    a_sigma: float,
    omega_sigma: float,
    l_hi: float | None = None,
    tol: float | None = None,
) -> RangeResult:
    """
    Largest separation with positive concurrence.

    Raises NoEntanglementError when f <= 0 on the whole scan and BracketEscapeError when
    f is still positive at l_hi. If any evaluation behind the result did not converge the
    result carries status "nonconverged" (a scan with no positive value then gives l_max = 0).
    """
    scenario = Scenario(scenario)
    l_hi = settings.L_HI if l_hi is None else float(l_hi)
    tol = settings.TOL if tol is None else tol
    f = _Harvest(scenario, a_sigma, omega_sigma, tol)

    grid = np.geomspace(settings.L_LO, l_hi, settings.LMAX_SCAN_POINTS)
    values = np.array([f(l) for l in grid])
    while True:
        positive = values > 0
        changes = positive[:-1] != positive[1:]
        crowded = bool(np.any(changes[:-1] & changes[1:]))
        if not crowded or 2 * grid.size - 1 > settings.LMAX_SCAN_MAX:
            break
        refined = _refine_grid(grid)
        fresh = np.array([f(l) for l in refined[1::2]])
        merged = np.empty(refined.size)
        merged[0::2] = values
        merged[1::2] = fresh
        grid, values = refined, merged
        logger.debug("l_max %s: adjacent sign changes, scan densified to %d points", scenario.value, grid.size)

    positive = values > 0
    if not positive.any() and f.failures:
        logger.warning(
            "l_max %s omega=%g: no positive value, %d evaluations not converged",
            scenario.value,
            omega_sigma,
            f.failures,
        )
        return RangeResult(
            l_max_sigma=0.0,
            bracket_width=0.0,
            evaluations=f.evaluations,
            l_hi=l_hi,
            scan_points=int(grid.size),
            status="nonconverged",
        )
    if not positive.any():
        raise NoEntanglementError(
            f"no harvesting for {scenario.value} at a={a_sigma:g}, omega={omega_sigma:g} on [{grid[0]:g}, {l_hi:g}]"
        )
    if positive[-1]:
        raise BracketEscapeError(l_hi)

    i = int(np.flatnonzero(positive[:-1] & ~positive[1:])[-1])
    lo, hi = float(grid[i]), float(grid[i + 1])
    while 0.5 * (hi - lo) > settings.LMAX_BRACKET:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid

    return RangeResult(
        l_max_sigma=0.5 * (lo + hi),
        bracket_width=0.5 * (hi - lo),
        evaluations=f.evaluations,
        l_hi=l_hi,
        scan_points=int(grid.size),
        status=f.status,
    )


def l_max_resolved(
    scenario: Scenario,
    a_sigma: float,
    omega_sigma: float,
    l_hi: float | None = None,
    tol: float | None = None,
    *,
    retries: int = 2,
) -> RangeResult:
    """l_max that doubles l_hi on bracket escape (up to `retries` times) and maps no-entanglement to l_max = 0."""
    l_hi = settings.L_HI if l_hi is None else float(l_hi)
    for attempt in range(retries + 1):
        try:
            return l_max(scenario, a_sigma, omega_sigma, l_hi, tol)
        except BracketEscapeError:
            if attempt == retries:
                raise
            logger.warning("concurrence still positive at l_hi=%g; retrying with %g", l_hi, 2 * l_hi)
            l_hi *= 2.0
        except NoEntanglementError as exc:
            logger.info("%s", exc)
            return RangeResult(l_max_sigma=0.0, bracket_width=0.0, l_hi=l_hi, status="no_entanglement")
    raise AssertionError("unreachable")


def _lmax_task(task: tuple[Scenario, float, float, float | None, float | None]) -> LmaxRow:
    scenario, a_sigma, omega_sigma, l_hi, tol = task
    result = l_max_resolved(scenario, a_sigma, omega_sigma, l_hi, tol)
    return LmaxRow(scenario=scenario, a_sigma=a_sigma, omega_sigma=omega_sigma, result=result)


def lmax_curve(
    scenario: Scenario,
    a_sigma: float,
    omegas: Sequence[float],
    l_hi: float | None = None,
    tol: float | None = None,
    *,
    jobs: int | None = None,
    progress: bool | None = None,
) -> list[LmaxRow]:
    """L_max over a gap grid, one row per omega in grid order."""
    scenario = Scenario(scenario)
    tasks = [(scenario, float(a_sigma), float(w), l_hi, tol) for w in omegas]
    if any(not math.isfinite(w) for _, _, w, _, _ in tasks):
        raise ValidationError("omega grid must be finite")
    return _run_ordered(_lmax_task, tasks, jobs=jobs, progress=progress, desc=f"L_max {scenario.value}")
