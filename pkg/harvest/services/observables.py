# harvest/services/observables.py
"""
Leading-order observables per lambda^2: transition probability P, non-local term X,
concurrence C = 2 max(0, |X| - P) and the resonance gap.

X for an accelerated pair is

    X = - int_0^inf dy  sum_k c_k [ PV int g/u_k dx + i pi sum_r g(x_r) / |u_k'(x_r)| ],
    g(x) = exp(-(x^2 + y^2)/4 - i Omega x),

i.e. 1/(u - i eps) split into principal value and delta parts. When a pair of zeros of u is
born at a tangency y_s (anti-parallel threshold, perpendicular h+ minimum touching zero) the
inner value diverges like |y - y_s|^(-1/2) on both sides; those segments are integrated in
t with y = y_s -+ t^2.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from harvest.config import settings
from harvest.errors import DomainError, NonConvergenceError, UnsupportedScenarioError, ValidationError
from harvest.schemas import ObservableRecord, PhysicalConfig, Scenario
from harvest.services import kernels
from harvest.services.kernels import WINDOW
from harvest.services.quadrature import (
    PoleSet,
    QuadratureResult,
    integrate_finite,
    integrate_pv,
    integrate_semi_infinite,
    pointwise,
)
from harvest.services.specfun import erfc_real, erfcx_real, scaled_cerfc

logger = logging.getLogger(__name__)

SQRT_PI = math.sqrt(math.pi)

# exp(-t^2) < 1e-18 beyond this
GAUSS_CUTOFF = math.sqrt(math.log(1e18))

POLE_MARGIN = 1e-8
SERIES_CUTOFF = 0.05


def _exact(value: float | complex) -> QuadratureResult:
    return QuadratureResult(value=value, abs_error_estimate=0.0, evaluations=0, converged=True)


def _inner_tol(tol: float) -> float:
    return tol * settings.INNER_TOL / settings.TOL


# ---------------------------
# Transition probability
# ---------------------------


def transition_probability_rest(omega_sigma: float) -> float:
    """P/lambda^2 = (1/4pi) [e^{-W^2} - sqrt(pi) W erfc(W)] for a detector at rest."""
    w = float(omega_sigma)
    if not math.isfinite(w):
        raise DomainError(f"omega_sigma must be finite, got {omega_sigma!r}")
    if w >= 0:
        # e^{-W^2} [1 - sqrt(pi) W erfcx(W)]: no cancellation between two vanishing terms
        return math.exp(-w * w) * (1.0 - SQRT_PI * w * erfcx_real(w)) / (4.0 * math.pi)
    return (math.exp(-w * w) - SQRT_PI * w * erfc_real(w)) / (4.0 * math.pi)


def _sinh_gap(s: np.ndarray) -> np.ndarray:
    """1/s^2 - 1/sinh^2(s), continued to 1/3 at s = 0."""
    s = np.abs(np.asarray(s, dtype=float))
    small = s < SERIES_CUTOFF
    safe = np.where(small, 1.0, s)
    direct = 1.0 / safe**2 - 4.0 * np.exp(-2.0 * safe) / np.expm1(-2.0 * safe) ** 2
    s2 = s * s
    series = 1.0 / 3.0 - s2 / 15.0 + 2.0 * s2**2 / 189.0 - s2**3 / 675.0
    return np.where(small, series, direct)


def _p_result(a: float, omega: float, tol: float) -> QuadratureResult:
    rest = _exact(transition_probability_rest(omega))
    if a < settings.A_MIN:
        return rest
    # s = a t in (a / 4 pi^{3/2}) int cos(2 Omega s / a) e^{-s^2/a^2} (1/s^2 - 1/sinh^2 s) ds
    pref = a * a / (4.0 * math.pi**1.5)

    def f(t: np.ndarray) -> np.ndarray:
        return np.cos(2.0 * omega * t) * np.exp(-t * t) * _sinh_gap(a * t)

    part = integrate_semi_infinite(f, tol / pref, upper=GAUSS_CUTOFF)
    return part.scaled(pref) + rest


def transition_probability(cfg: PhysicalConfig, tol: float | None = None) -> float:
    """P/lambda^2 of either detector; identical for all three acceleration scenarios."""
    tol = settings.TOL if tol is None else tol
    res = _p_result(cfg.a_sigma, cfg.omega_sigma, tol)
    if not res.converged:
        raise NonConvergenceError("transition probability", res.abs_error_estimate, tol)
    return float(res.value)


# ---------------------------
# Non-local term at rest
# ---------------------------


def x_rest(cfg: PhysicalConfig) -> complex:
    """X/lambda^2 = (-i / 4 sqrt(pi)) (1/L) e^{-W^2} w(-L/2) for two static detectors."""
    l = cfg.l_sigma
    w = scaled_cerfc(complex(-0.5 * l, 0.0))
    return -1j / (4.0 * SQRT_PI) / l * math.exp(-cfg.omega_sigma**2) * w


def x_rest_quadrature(cfg: PhysicalConfig, tol: float = 1e-12) -> complex:
    """
    X/lambda^2 at rest from its integral form.

    The x~ integral of the static kernel 1/(4 pi^2 (L^2 - y^2)) is Gaussian
    (2 sqrt(pi) e^{-W^2}); the y~ integral is done as PV + delta on the light cone y~ = L.
    """
    l, omega = cfg.l_sigma, cfg.omega_sigma
    poles = PoleSet((l,), (2.0 * l,)) if l < WINDOW - POLE_MARGIN else PoleSet()
    pv = integrate_pv(
        lambda y: np.exp(-0.25 * y * y),
        lambda y: l * l - y * y,
        poles,
        0.0,
        WINDOW,
        tol,
        near=lambda y_r, d: -d * (2.0 * l + d),
    )
    if not pv.converged:
        raise NonConvergenceError("rest X quadrature", pv.abs_error_estimate, tol)
    delta = math.exp(-0.25 * l * l) / (2.0 * l)
    inner = pv.value + 1j * math.pi * delta
    return complex(-(2.0 * SQRT_PI * math.exp(-omega * omega)) / (4.0 * math.pi**2) * inner)


# ---------------------------
# Non-local term, accelerated
# ---------------------------


@dataclass
class _InnerLedger:
    """Collects the x~ integrals done inside an outer y~ integrand."""

    max_error: float = 0.0
    evaluations: int = 0
    failures: int = 0

    def record(self, res: QuadratureResult) -> None:
        self.max_error = max(self.max_error, res.abs_error_estimate)
        self.evaluations += res.evaluations
        if not res.converged:
            self.failures += 1


def _gaussian(omega: float, y: float):
    def g(x):
        return np.exp(-0.25 * (x * x + y * y) - 1j * omega * x)

    return g


def _inner_pv(
    scenario: Scenario,
    a: float,
    omega: float,
    l: float,
    y: float,
    tol: float,
    *,
    offset: float | None = None,
) -> QuadratureResult:
    """sum_k c_k [PV int g/u_k dx + i pi sum_r g(x_r)/|u_k'(x_r)|] at one y~, to absolute `tol`."""
    lo, hi = -WINDOW, WINDOW
    g = _gaussian(omega, y)
    # near-degenerate pairs are integrable here; the tangency itself is handled by the outer substitution
    local = kernels._local_terms(scenario, a, l, y, threshold_offset=offset)
    points = sorted({x for x in kernels._focus_points(scenario, a, l, y) if lo < x < hi})

    parts = []
    delta = 0j
    for term in local:
        poles = term.poles.inside(lo, hi, POLE_MARGIN)
        share = tol / (len(local) * term.prefactor)
        pv = integrate_pv(g, term.denominator, poles, lo, hi, share, near=term.near, points=points)
        parts.append(pv.scaled(term.prefactor))
        for x_r, slope in poles:
            delta += term.prefactor * complex(g(x_r)) / slope

    res = QuadratureResult.total(parts)
    return QuadratureResult(
        value=complex(res.value) + 1j * math.pi * delta,
        abs_error_estimate=res.abs_error_estimate,
        evaluations=res.evaluations,
        converged=res.converged,
    )


def _singular_point(scenario: Scenario, a: float, l: float) -> float | None:
    if scenario is Scenario.ANTIPARALLEL:
        y_s = kernels._antiparallel_threshold(a, l)
    elif scenario is Scenario.PERPENDICULAR:
        y_s = kernels._perpendicular_threshold(a, l)
    else:
        y_s = None
    if y_s is None or not 0.0 < y_s < WINDOW:
        return None
    return y_s


def _breakpoints(scenario: Scenario, a: float, l: float) -> list[float]:
    points = [abs(l)]
    if scenario is Scenario.PARALLEL:
        points.append(kernels.parallel_crossing(a, l))
    return sorted({p for p in points if 0.0 < p < WINDOW})


def _outer(inner, singular: float | None, points: list[float], tol: float) -> QuadratureResult:
    """int_0^WINDOW inner(y) dy, with y = s -+ t^2 on either side of a singular point s."""
    if singular is None:
        return integrate_finite(pointwise(lambda y: inner(y, None)), 0.0, WINDOW, tol, points=points)

    s = singular
    below = integrate_finite(
        pointwise(lambda t: 2.0 * t * inner(s - t * t, -t * t)),
        0.0,
        math.sqrt(s),
        0.5 * tol,
        points=[math.sqrt(s - p) for p in points if p < s],
    )
    above = integrate_finite(
        pointwise(lambda t: 2.0 * t * inner(s + t * t, t * t)),
        0.0,
        math.sqrt(WINDOW - s),
        0.5 * tol,
        points=[math.sqrt(p - s) for p in points if p > s],
    )
    return below + above


def _x_nonlocal_result(scenario: Scenario, a: float, omega: float, l: float, tol: float) -> QuadratureResult:
    """X/lambda^2 for a signed separation l (the parallel kernel is even in l)."""
    inner_tol = _inner_tol(tol)
    singular = _singular_point(scenario, a, l)
    ledger = _InnerLedger()

    def inner(y: float, offset: float | None) -> complex:
        res = _inner_pv(scenario, a, omega, l, y, inner_tol, offset=offset)
        ledger.record(res)
        return complex(res.value)

    outer = _outer(inner, singular, _breakpoints(scenario, a, l), tol)
    logger.debug(
        "X %s a=%g omega=%g L=%g: outer err %.2e, %d inner evals, %d inner failures",
        scenario.value,
        a,
        omega,
        l,
        outer.abs_error_estimate,
        ledger.evaluations,
        ledger.failures,
    )
    return QuadratureResult(
        value=-complex(outer.value),
        abs_error_estimate=outer.abs_error_estimate + ledger.max_error * WINDOW,
        evaluations=outer.evaluations + ledger.evaluations,
        converged=outer.converged and ledger.failures == 0,
    )


def _require_acceleration(scenario: Scenario, cfg: PhysicalConfig) -> None:
    if scenario is Scenario.INERTIAL:
        raise UnsupportedScenarioError("x_nonlocal is for accelerated scenarios; use x_rest for the inertial pair")
    if not cfg.a_sigma > 0:
        raise ValidationError(f"{scenario.value} scenario requires a_sigma > 0, got {cfg.a_sigma}")


def x_nonlocal(scenario: Scenario, cfg: PhysicalConfig, tol: float | None = None) -> complex:
    """X/lambda^2 of an accelerated pair; below A_MIN the rest closed form is returned."""
    scenario = Scenario(scenario)
    tol = settings.TOL if tol is None else tol
    _require_acceleration(scenario, cfg)
    if cfg.a_sigma < settings.A_MIN:
        return x_rest(cfg)
    res = _x_nonlocal_result(scenario, cfg.a_sigma, cfg.omega_sigma, cfg.l_sigma, tol)
    if not res.converged:
        raise NonConvergenceError(f"X ({scenario.value})", res.abs_error_estimate, tol)
    return complex(res.value)


# ---------------------------
# Small-eps cross-check
# ---------------------------


def x_nonlocal_epsilon(scenario: Scenario, cfg: PhysicalConfig, eps: float, tol: float = 1e-8) -> complex:
    """
    X/lambda^2 with the kernel kept at finite eps: sum_k c_k / (u_k - i eps a^2).

    eps multiplies a^2 so that it is measured against u / a^2, which tends to the static
    (L^2 - y^2)/4-type denominators as a -> 0. Plain nested adaptive quadrature; used only
    as an independent check of the principal-value evaluation.
    """
    scenario = Scenario(scenario)
    _require_acceleration(scenario, cfg)
    if not eps > 0:
        raise ValidationError(f"eps must be > 0, got {eps}")
    a, omega, l = cfg.a_sigma, cfg.omega_sigma, cfg.l_sigma
    terms = kernels._terms(scenario, a, l)
    shift = 1j * eps * a * a
    inner_tol = _inner_tol(tol)
    ledger = _InnerLedger()

    def inner(y: float) -> complex:
        g = _gaussian(omega, y)
        poles = kernels._roots(scenario, a, l, y, check_degenerate=False)
        points = {x for p in poles for x in p.locations if -WINDOW < x < WINDOW}
        points.update(x for x in kernels._focus_points(scenario, a, l, y) if -WINDOW < x < WINDOW)

        def f(x):
            return g(x) * sum(t.prefactor / (t.denominator(x, y) - shift) for t in terms)

        res = integrate_finite(f, -WINDOW, WINDOW, inner_tol, points=sorted(points))
        ledger.record(res)
        return complex(res.value)

    points = _breakpoints(scenario, a, l)
    singular = _singular_point(scenario, a, l)
    if singular is not None:
        points = sorted({*points, singular})
    outer = integrate_finite(pointwise(inner), 0.0, WINDOW, tol, points=points)
    if not (outer.converged and ledger.failures == 0):
        logger.warning("eps-regularized X (%s, eps=%g) did not fully converge", scenario.value, eps)
    return -complex(outer.value)


def x_nonlocal_extrapolated(
    scenario: Scenario,
    cfg: PhysicalConfig,
    eps: tuple[float, ...] = (1e-3, 3e-4, 1e-4),
    tol: float = 1e-8,
) -> complex:
    """
    eps -> 0 limit of finite-eps evaluations.

    Two values extrapolate linearly; three fit 1, eps and eps log eps, the last being the
    leading correction once the y~ integral runs through a tangency.
    """
    e = np.asarray(eps, dtype=float)
    if e.size not in (2, 3) or np.any(e <= 0) or np.unique(e).size != e.size:
        raise ValidationError(f"need two or three distinct eps > 0, got {eps}")
    values = np.array([x_nonlocal_epsilon(scenario, cfg, float(v), tol) for v in e])
    basis = np.column_stack([np.ones_like(e), e, e * np.log(e)])[:, : e.size]
    return complex(np.linalg.solve(basis, values)[0])


# ---------------------------
# Concurrence / records
# ---------------------------


def _results(scenario: Scenario, cfg: PhysicalConfig, tol: float) -> tuple[QuadratureResult, QuadratureResult]:
    scenario = Scenario(scenario)
    if scenario.accelerated and not cfg.a_sigma > 0:
        raise ValidationError(f"{scenario.value} scenario requires a_sigma > 0, got {cfg.a_sigma}")
    if scenario is Scenario.INERTIAL or cfg.a_sigma < settings.A_MIN:
        return _exact(transition_probability_rest(cfg.omega_sigma)), _exact(x_rest(cfg))
    p = _p_result(cfg.a_sigma, cfg.omega_sigma, tol)
    x = _x_nonlocal_result(scenario, cfg.a_sigma, cfg.omega_sigma, cfg.l_sigma, tol)
    return p, x


def concurrence_from(x: complex, p: float) -> float:
    return 2.0 * max(0.0, abs(x) - p)


def concurrence(scenario: Scenario, cfg: PhysicalConfig, tol: float | None = None) -> float:
    """C/lambda^2 = 2 max(0, |X| - P) with P_A = P_B."""
    tol = settings.TOL if tol is None else tol
    p, x = _results(scenario, cfg, tol)
    for what, res in (("transition probability", p), ("X", x)):
        if not res.converged:
            raise NonConvergenceError(what, res.abs_error_estimate, tol)
    return concurrence_from(complex(x.value), float(p.value))


def evaluate(scenario: Scenario, cfg: PhysicalConfig, tol: float | None = None) -> ObservableRecord:
    """All observables at one point; non-convergence is reported in `status` instead of raised."""
    scenario = Scenario(scenario)
    tol = settings.TOL if tol is None else tol
    p, x = _results(scenario, cfg, tol)
    x_value = complex(x.value)
    status = "ok" if p.converged and x.converged else "nonconverged"
    if status != "ok":
        logger.warning(
            "%s a=%g omega=%g L=%g not converged (p err %.2e, x err %.2e, tol %.1e)",
            scenario.value,
            cfg.a_sigma,
            cfg.omega_sigma,
            cfg.l_sigma,
            p.abs_error_estimate,
            x.abs_error_estimate,
            tol,
        )
    return ObservableRecord(
        scenario=scenario,
        cfg=cfg,
        p=float(p.value),
        re_x=x_value.real,
        im_x=x_value.imag,
        concurrence=concurrence_from(x_value, float(p.value)),
        p_err=p.abs_error_estimate,
        x_err=x.abs_error_estimate,
        status=status,
    )


def resonance_gap(cfg: PhysicalConfig) -> float:
    """Omega_res sigma = arccos((2 - aL)/2) / a, defined for aL < 4."""
    a, l = cfg.a_sigma, cfg.l_sigma
    if not a > 0:
        raise DomainError(f"resonance gap needs a_sigma > 0, got {a}")
    if a * l >= 4.0:
        raise DomainError(f"resonance gap needs aL < 4, got aL={a * l:g}")
    return math.acos(0.5 * (2.0 - a * l)) / a
