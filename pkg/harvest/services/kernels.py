# harvest/services/kernels.py
"""
Symmetrized Wightman kernels of the three acceleration scenarios.

Coordinates are x~ = tau + tau' and y~ = tau - tau' in units of sigma;
every kernel is a sum of prefactor / (u - i eps) terms with real denominators u(x~, y~):

- parallel:       u1 = (aL/2 - e^{-xa/2} S)(aL/2 + e^{xa/2} S),  u2 = u1(-x),  S = sinh(ya/2)
- anti-parallel:  u  = F1 * F2, F1/F2 = cosh(xa/2) + e^{-+ya/2}(aL/2 - 1)
- perpendicular:  h+ and h- = h+(-x)

Denominators are written with cosh z - 1 = 2 sinh^2(z/2) and expm1 so that they keep full
relative accuracy when a -> 0 (each behaves like a^2 (L^2 - y^2) there).
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import optimize

from harvest.errors import DegenerateRootError, UnsupportedScenarioError, ValidationError
from harvest.schemas import PhysicalConfig, Scenario
from harvest.services.quadrature import Near, PoleSet, bracket_roots

logger = logging.getLogger(__name__)

# |x~|, |y~| beyond which the Gaussian switching factor exp(-(x^2+y^2)/4) is below 1e-18.
WINDOW = math.sqrt(4.0 * math.log(1e18))

# Root slopes are compared against a^3, the natural scale of du/dx~ for small a.
DEGENERATE_SLOPE = 1e-12
DEGENERATE_OFFSET = 1e-8

PERP_SCAN_POINTS = 1025
THRESHOLD_SCAN_POINTS = 257

Denominator = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class KernelTerm:
    prefactor: float
    denominator: Denominator  # u(x~, y~)
    slope: Denominator  # du/dx~
    label: str = ""

    def __post_init__(self) -> None:
        if not self.prefactor > 0:
            raise ValidationError(f"kernel prefactor must be > 0, got {self.prefactor}")

    def value(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Real part of prefactor / (u - i eps) away from the zeros of u."""
        return self.prefactor / self.denominator(x, y)


def _half_cosh_m1(z: np.ndarray) -> np.ndarray:
    """cosh(z) - 1 without cancellation."""
    return 2.0 * np.sinh(0.5 * z) ** 2


# ---------------------------
# Parallel
# ---------------------------


def _parallel_terms(a: float, l: float) -> list[KernelTerm]:
    A = 0.5 * a * l
    pref = a * a / (32.0 * math.pi**2)

    def u1(x, y):
        s = np.sinh(0.5 * a * y)
        return (A - np.exp(-0.5 * a * x) * s) * (A + np.exp(0.5 * a * x) * s)

    def u2(x, y):
        return u1(-x, y)

    def du1(x, y):
        return a * A * np.sinh(0.5 * a * y) * np.cosh(0.5 * a * x)

    def du2(x, y):
        return -du1(-x, y)

    return [KernelTerm(pref, u1, du1, "u1"), KernelTerm(pref, u2, du2, "u2")]


def _parallel_roots(a: float, l: float, y: float) -> list[PoleSet]:
    A = 0.5 * a * l
    s = math.sinh(0.5 * a * y)
    if s <= 0 or A == 0:
        return [PoleSet(), PoleSet()]
    # u1 vanishes where e^{-xa/2} S = A (L > 0) or e^{xa/2} S = -A (L < 0).
    x1 = (2.0 / a) * math.log(s / A) if A > 0 else (2.0 / a) * math.log(-A / s)
    slope = 0.5 * a * (A * A + s * s)
    return [PoleSet((x1,), (slope,)), PoleSet((-x1,), (slope,))]


def parallel_crossing(a: float, l: float) -> float:
    """y~ at which the parallel light-cone zeros pass through x~ = 0 (sinh(ay/2) = a|L|/2)."""
    return (2.0 / a) * math.asinh(0.5 * a * abs(l))


# ---------------------------
# Anti-parallel
# ---------------------------


def _antiparallel_terms(a: float, l: float) -> list[KernelTerm]:
    A = 0.5 * a * l
    pref = a * a / (16.0 * math.pi**2)

    # F1 = cosh(xa/2) - (1 - A) e^{-ya/2},  F2 = cosh(xa/2) - (1 - A) e^{ya/2}
    def f1(x, y):
        return _half_cosh_m1(0.5 * a * x) - np.expm1(-0.5 * a * y) + A * np.exp(-0.5 * a * y)

    def f2(x, y):
        return _half_cosh_m1(0.5 * a * x) - np.expm1(0.5 * a * y) + A * np.exp(0.5 * a * y)

    def u(x, y):
        return f1(x, y) * f2(x, y)

    def du(x, y):
        return 0.5 * a * np.sinh(0.5 * a * x) * (f1(x, y) + f2(x, y))

    return [KernelTerm(pref, u, du, "u")]


def _antiparallel_threshold(a: float, l: float) -> float | None:
    k = 1.0 - 0.5 * a * l
    if k <= 0:
        return None
    return (2.0 / a) * -math.log(k)


def _antiparallel_roots(
    a: float,
    l: float,
    y: float,
    *,
    threshold_offset: float | None = None,
    check_degenerate: bool = True,
) -> list[PoleSet]:
    y_th = _antiparallel_threshold(a, l)
    if y_th is None:
        return [PoleSet()]
    offset = (y - y_th) if threshold_offset is None else threshold_offset
    if offset < 0:
        return [PoleSet()]

    # cosh(x_r a/2) = (1 - aL/2) e^{ya/2} = 1 + delta
    delta = math.expm1(0.5 * a * offset)
    root_sinh = math.sqrt(delta * (2.0 + delta))
    x_r = (2.0 / a) * math.log1p(delta + root_sinh)
    f1 = 2.0 * math.sinh(0.25 * a * x_r) ** 2 - math.expm1(-0.5 * a * y) + 0.5 * a * l * math.exp(-0.5 * a * y)
    slope = 0.5 * a * root_sinh * f1

    if check_degenerate and (offset < DEGENERATE_OFFSET or slope < DEGENERATE_SLOPE * a**3):
        raise DegenerateRootError(x_r, slope)
    if x_r == 0.0 or slope <= 0.0:
        return [PoleSet()]
    return [PoleSet((-x_r, x_r), (slope, slope))]


# ---------------------------
# Perpendicular
# ---------------------------


def _perp_h(a: float, l: float, x, y, sign: float = 1.0):
    p = _half_cosh_m1(0.5 * a * x)
    q = _half_cosh_m1(0.5 * a * y)
    c = _half_cosh_m1(0.5 * a * (x + sign * y))
    return (a * l) ** 2 + 2.0 * a * l * c - 8.0 * q - 4.0 * p * q - 2.0 * q * q + 2.0 * p * p


def _perp_dh(a: float, l: float, x, y, sign: float = 1.0):
    p = _half_cosh_m1(0.5 * a * x)
    q = _half_cosh_m1(0.5 * a * y)
    return a * a * l * np.sinh(0.5 * a * (x + sign * y)) + 2.0 * a * (p - q) * np.sinh(0.5 * a * x)


def _perpendicular_terms(a: float, l: float) -> list[KernelTerm]:
    pref = a * a / (8.0 * math.pi**2)

    def hp(x, y):
        return _perp_h(a, l, x, y, 1.0)

    def hm(x, y):
        return _perp_h(a, l, x, y, -1.0)

    def dhp(x, y):
        return _perp_dh(a, l, x, y, 1.0)

    def dhm(x, y):
        return _perp_dh(a, l, x, y, -1.0)

    return [KernelTerm(pref, hp, dhp, "h+"), KernelTerm(pref, hm, dhm, "h-")]


@lru_cache(maxsize=4096)
def _perp_minima(a: float, l: float, y: float) -> tuple[tuple[float, float], ...]:
    """Local minima (x~, h+) of h+(., y~) inside the window, refined with a bounded Brent search."""
    grid = np.linspace(-WINDOW, WINDOW, PERP_SCAN_POINTS)
    values = _perp_h(a, l, grid, y)
    interior = np.flatnonzero((values[1:-1] <= values[:-2]) & (values[1:-1] <= values[2:])) + 1

    minima = []
    for i in interior:
        res = optimize.minimize_scalar(
            lambda x: float(_perp_h(a, l, x, y)),
            bounds=(float(grid[i - 1]), float(grid[i + 1])),
            method="bounded",
            options={"xatol": 1e-12},
        )
        x_min = float(res.x)
        minima.append((x_min, float(_perp_h(a, l, x_min, y))))
    return tuple(minima)


def _perp_min_value(a: float, l: float, y: float) -> float:
    minima = _perp_minima(a, l, y)
    return min(h for _, h in minima) if minima else float(_perp_h(a, l, np.array(WINDOW), y))


@lru_cache(maxsize=256)
def _perpendicular_threshold(a: float, l: float) -> float | None:
    ys = np.linspace(0.0, WINDOW, THRESHOLD_SCAN_POINTS)
    previous = ys[0]
    for y in ys[1:]:
        if _perp_min_value(a, l, float(y)) <= 0.0:
            return optimize.brentq(
                lambda t: _perp_min_value(a, l, t),
                float(previous),
                float(y),
                xtol=1e-13 * max(1.0, float(y)),
            )
        previous = y
    return None


def _perpendicular_roots(a: float, l: float, y: float, *, check_degenerate: bool = True) -> list[PoleSet]:
    extra = [x for x, _ in _perp_minima(a, l, y)]
    roots = bracket_roots(
        lambda x: _perp_h(a, l, x, y),
        -WINDOW,
        WINDOW,
        PERP_SCAN_POINTS,
        extra_points=extra,
    )
    slopes = [abs(float(_perp_dh(a, l, x, y))) for x in roots]
    if check_degenerate:
        for x, s in zip(roots, slopes, strict=True):
            if s < DEGENERATE_SLOPE * a**3:
                raise DegenerateRootError(x, s)

    kept = [(x, s) for x, s in zip(roots, slopes, strict=True) if s > 0.0]
    plus = PoleSet(tuple(x for x, _ in kept), tuple(s for _, s in kept))
    return [plus, plus.mirrored()]


# ---------------------------
# Denominators at fixed y~
# ---------------------------


@dataclass(frozen=True)
class LocalTerm:
    """
    One kernel term frozen at a y~: u(x~), its zeros, and `near(x_r, d)` = u(x_r + d).

    Both callables are rewritten around the zeros so that u keeps its relative accuracy
    next to them, which is what the folded principal value relies on.
    """

    prefactor: float
    denominator: Callable[[np.ndarray], np.ndarray]
    poles: PoleSet = field(default_factory=PoleSet)
    near: Near | None = None


def _parallel_local(a: float, l: float, y: float) -> list[LocalTerm]:
    pref = a * a / (32.0 * math.pi**2)
    p1, p2 = _parallel_roots(a, l, y)
    if not len(p1):
        return [LocalTerm(pref, lambda x, t=term: t.denominator(x, y)) for term in _parallel_terms(a, l)]

    A = 0.5 * a * l
    s = math.sinh(0.5 * a * y)
    x1 = p1.locations[0]
    ratio = s * s / A

    # u1(x1 + d): the vanishing factor is -A expm1(-+da/2), the other one keeps its sign
    def from_root(d):
        half = 0.5 * a * d
        if A > 0:
            return -A * np.expm1(-half) * (A + ratio * np.exp(half))
        return (A + ratio * np.exp(-half)) * (-A * np.expm1(half))

    return [
        LocalTerm(pref, lambda x: from_root(x - x1), p1, lambda x_r, d: from_root(d)),
        LocalTerm(pref, lambda x: from_root(-x - x1), p2, lambda x_r, d: from_root(-d)),
    ]


def _antiparallel_local(a: float, l: float, y: float, threshold_offset: float | None) -> list[LocalTerm]:
    pref = a * a / (16.0 * math.pi**2)
    A = 0.5 * a * l
    y_th = _antiparallel_threshold(a, l)
    if y_th is None:
        (term,) = _antiparallel_terms(a, l)
        return [LocalTerm(pref, lambda x: term.denominator(x, y))]

    def f1(x):
        return _half_cosh_m1(0.5 * a * x) - np.expm1(-0.5 * a * y) + A * np.exp(-0.5 * a * y)

    # F2 = cosh(xa/2) - (1 - aL/2) e^{ya/2} = cosh(xa/2) - 1 - delta, delta from the offset alone
    offset = (y - y_th) if threshold_offset is None else threshold_offset
    delta = math.expm1(0.5 * a * offset)
    (poles,) = _antiparallel_roots(a, l, y, threshold_offset=offset, check_degenerate=False)
    if not len(poles):
        return [LocalTerm(pref, lambda x: f1(x) * (_half_cosh_m1(0.5 * a * x) - delta))]

    x_r = poles.locations[1]

    def f2_from(rho, d):
        # F2(rho + d) = 2 sinh((rho + d + x_r)a/4) sinh((rho + d - x_r)a/4)
        return 2.0 * np.sinh(0.25 * a * (d + (rho + x_r))) * np.sinh(0.25 * a * (d + (rho - x_r)))

    return [
        LocalTerm(
            pref,
            lambda x: f1(x) * f2_from(0.0, x),
            poles,
            lambda rho, d: f1(rho + d) * f2_from(rho, d),
        )
    ]


@dataclass(frozen=True)
class _Bowl:
    """
    h+ around one local minimum, written through its zeros (d = x - x1, e = x - x2):

        pair x1 < x2:     sinh(da/4) sinh(ea/8) C(d, e)
        no zero:          h+(x1) + sinh(da/4) sinh(da/8) C(d, d)      (x1 the minimum)
        lone zero x1:     sinh(da/4) B(d)                              (partner outside the window)

    B and C follow from sinh^2 u - sinh^2 v = sinh(u + v) sinh(u - v); neither vanishes near
    the zeros, so h+ keeps its relative accuracy however close the pair is.
    """

    a: float
    l: float
    y: float
    x1: float
    x2: float | None = None
    floor: float = 0.0
    lone: bool = False

    @property
    def center(self) -> float:
        return self.x1 if self.x2 is None else 0.5 * (self.x1 + self.x2)

    @property
    def gap(self) -> float:
        return 0.0 if self.x2 is None else self.x2 - self.x1

    def _p(self, d):
        a, x1 = self.a, self.x1
        dp = 2.0 * np.sinh(0.25 * a * (2.0 * x1 + d)) * np.sinh(0.25 * a * d)
        return 2.0 * _half_cosh_m1(0.5 * a * x1) + dp - 2.0 * _half_cosh_m1(0.5 * a * self.y)

    def _b(self, d):
        a, x1 = self.a, self.x1
        s1 = np.sinh(0.25 * a * (2.0 * x1 + 2.0 * self.y + d))
        s2 = np.sinh(0.25 * a * (2.0 * x1 + d))
        return 4.0 * (a * self.l * s1 + self._p(d) * s2)

    def _c(self, d, e):
        a, x1, d2 = self.a, self.x1, self.gap
        return (
            8.0 * a * self.l * np.cosh(0.125 * a * (4.0 * x1 + 4.0 * self.y + d + d2))
            + 8.0 * self._p(d) * np.cosh(0.125 * a * (4.0 * x1 + d + d2))
            + 16.0
            * math.sinh(0.25 * a * (2.0 * x1 + d2))
            * np.sinh(0.25 * a * (2.0 * x1 + d + d2))
            * np.cosh(0.125 * a * e)
        )

    def value(self, d, e):
        a = self.a
        if self.lone:
            return np.sinh(0.25 * a * d) * self._b(d)
        return self.floor + np.sinh(0.25 * a * d) * np.sinh(0.125 * a * e) * self._c(d, e)

    def at(self, x):
        return self.value(x - self.x1, x - (self.x1 if self.x2 is None else self.x2))

    def zeros(self) -> list[tuple[float, Callable, float]]:
        """(x_r, d -> h+(x_r + d), |h+'(x_r)|) for each zero of the bowl."""
        a, d2 = self.a, self.gap
        zero = np.array(0.0)
        if self.lone:
            return [(self.x1, lambda d: self.value(d, d), 0.25 * a * abs(float(self._b(zero))))]
        if self.x2 is None:
            return []
        left = abs(0.25 * a * math.sinh(-0.125 * a * d2) * float(self._c(zero, np.array(-d2))))
        right = abs(0.125 * a * math.sinh(0.25 * a * d2) * float(self._c(np.array(d2), zero)))
        return [
            (self.x1, lambda d: self.value(d, d - d2), left),
            (self.x2, lambda d: self.value(d2 + d, d), right),
        ]


def _perp_bowls(a: float, l: float, y: float) -> list[_Bowl]:
    minima = _perp_minima(a, l, y)
    roots = bracket_roots(
        lambda x: _perp_h(a, l, x, y),
        -WINDOW,
        WINDOW,
        PERP_SCAN_POINTS,
        extra_points=[x for x, _ in minima],
    )
    bowls, paired = [], set()
    for x_m, h_m in minima:
        if h_m >= 0.0:
            bowls.append(_Bowl(a, l, y, x_m, floor=h_m))
            continue
        left = [r for r in roots if r < x_m]
        right = [r for r in roots if r > x_m]
        if left and right:
            bowls.append(_Bowl(a, l, y, left[-1], right[0]))
            paired.update((left[-1], right[0]))
    bowls.extend(_Bowl(a, l, y, r, lone=True) for r in roots if r not in paired)
    return bowls


def _perpendicular_local(a: float, l: float, y: float) -> list[LocalTerm]:
    pref = a * a / (8.0 * math.pi**2)
    bowls = _perp_bowls(a, l, y)
    if not bowls:
        return [LocalTerm(pref, lambda x, t=term: t.denominator(x, y)) for term in _perpendicular_terms(a, l)]

    centers = np.array([b.center for b in bowls])

    def plus(x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1)
        pick = np.argmin(np.abs(flat[:, None] - centers[None, :]), axis=1)
        out = np.empty_like(flat)
        for k, bowl in enumerate(bowls):
            sel = pick == k
            if sel.any():
                out[sel] = bowl.at(flat[sel])
        return out.reshape(x.shape)

    table = {
        x_r: (fn, slope)
        for bowl in bowls
        for x_r, fn, slope in bowl.zeros()
        if math.isfinite(slope) and slope > 0.0
    }
    locs = sorted(table)
    poles = PoleSet(tuple(locs), tuple(table[x][1] for x in locs))

    def near_plus(x_r, d):
        return table[x_r][0](d)

    return [
        LocalTerm(pref, plus, poles, near_plus),
        LocalTerm(pref, lambda x: plus(-x), poles.mirrored(), lambda rho, d: near_plus(-rho, -d)),
    ]


# ---------------------------
# Public API
# ---------------------------


def _check(scenario: Scenario, a: float) -> None:
    if scenario is Scenario.INERTIAL:
        raise UnsupportedScenarioError("the inertial kernel is handled by the closed forms in observables")
    if not a > 0:
        raise ValidationError(f"{scenario.value} kernels need a_sigma > 0, got {a}")


def _terms(scenario: Scenario, a: float, l: float) -> list[KernelTerm]:
    _check(scenario, a)
    if scenario is Scenario.PARALLEL:
        return _parallel_terms(a, l)
    if scenario is Scenario.ANTIPARALLEL:
        return _antiparallel_terms(a, l)
    return _perpendicular_terms(a, l)


def _roots(
    scenario: Scenario,
    a: float,
    l: float,
    y: float,
    *,
    threshold_offset: float | None = None,
    check_degenerate: bool = True,
) -> list[PoleSet]:
    _check(scenario, a)
    if not y > 0:
        raise ValidationError(f"y_tilde must be > 0, got {y}")
    if scenario is Scenario.PARALLEL:
        return _parallel_roots(a, l, y)
    if scenario is Scenario.ANTIPARALLEL:
        return _antiparallel_roots(a, l, y, threshold_offset=threshold_offset, check_degenerate=check_degenerate)
    return _perpendicular_roots(a, l, y, check_degenerate=check_degenerate)


def _local_terms(
    scenario: Scenario,
    a: float,
    l: float,
    y: float,
    *,
    threshold_offset: float | None = None,
) -> list[LocalTerm]:
    _check(scenario, a)
    if not y > 0:
        raise ValidationError(f"y_tilde must be > 0, got {y}")
    if scenario is Scenario.PARALLEL:
        return _parallel_local(a, l, y)
    if scenario is Scenario.ANTIPARALLEL:
        return _antiparallel_local(a, l, y, threshold_offset)
    return _perpendicular_local(a, l, y)


def _focus_points(scenario: Scenario, a: float, l: float, y: float) -> list[float]:
    """x~ where a root-free denominator comes closest to zero (narrow peaks of 1/u)."""
    if scenario is Scenario.ANTIPARALLEL:
        return [0.0]
    if scenario is Scenario.PERPENDICULAR:
        xs = [x for x, _ in _perp_minima(a, l, y)]
        return sorted({*xs, *(-x for x in xs)})
    return []


def _kernel_sum(scenario: Scenario, a: float, l: float, x, y):
    return sum(term.value(x, y) for term in _terms(scenario, a, l))


def kernel_terms(scenario: Scenario, cfg: PhysicalConfig) -> list[KernelTerm]:
    """Additive prefactor / (u - i eps) terms of the scenario's symmetrized kernel."""
    return _terms(scenario, cfg.a_sigma, cfg.l_sigma)


def kernel_roots(
    scenario: Scenario,
    cfg: PhysicalConfig,
    y_tilde: float,
    *,
    threshold_offset: float | None = None,
    check_degenerate: bool = True,
) -> list[PoleSet]:
    """
    Zeros in x~ of each term's denominator at fixed y~ > 0, one PoleSet per term.

    `threshold_offset` (anti-parallel only) is y~ - y~_th when the caller knows it more
    precisely than the difference of the two floats. With `check_degenerate` a root whose
    slope has collapsed raises DegenerateRootError.
    """
    return _roots(
        scenario,
        cfg.a_sigma,
        cfg.l_sigma,
        y_tilde,
        threshold_offset=threshold_offset,
        check_degenerate=check_degenerate,
    )


def kernel_local_terms(
    scenario: Scenario,
    cfg: PhysicalConfig,
    y_tilde: float,
    *,
    threshold_offset: float | None = None,
) -> list[LocalTerm]:
    """
    The kernel terms at one y~ > 0, each with its zeros and a denominator that stays
    accurate next to them. Near the anti-parallel threshold pass `threshold_offset`; the
    denominator and the zeros are then both built from it.
    """
    return _local_terms(scenario, cfg.a_sigma, cfg.l_sigma, y_tilde, threshold_offset=threshold_offset)


def kernel_sum(scenario: Scenario, cfg: PhysicalConfig, x_tilde, y_tilde):
    """Sum of prefactor / u over the terms (the kernel away from its light-cone zeros)."""
    return _kernel_sum(scenario, cfg.a_sigma, cfg.l_sigma, x_tilde, y_tilde)


def kernel_threshold_antiparallel(cfg: PhysicalConfig) -> float | None:
    """y~ at which the anti-parallel zeros appear (at x~ = 0); None when aL >= 2."""
    if not cfg.a_sigma > 0:
        raise ValidationError(f"anti-parallel threshold needs a_sigma > 0, got {cfg.a_sigma}")
    return _antiparallel_threshold(cfg.a_sigma, cfg.l_sigma)


def kernel_threshold_perpendicular(cfg: PhysicalConfig) -> float | None:
    """y~ at which min over x~ of h+ first touches zero inside the window; None if it never does."""
    if not cfg.a_sigma > 0:
        raise ValidationError(f"perpendicular threshold needs a_sigma > 0, got {cfg.a_sigma}")
    y_c = _perpendicular_threshold(cfg.a_sigma, cfg.l_sigma)
    logger.debug("perpendicular tangency a=%g L=%g: y_c=%s", cfg.a_sigma, cfg.l_sigma, y_c)
    return y_c
