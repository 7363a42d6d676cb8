# harvest/services/quadrature.py
"""
Adaptive one-dimensional quadrature.

- 7-point Gauss / 15-point Kronrod panel pairs, evaluated for all live panels at once
  (integrands receive 2-D numpy arrays and must be elementwise).
- Panel error: QUADPACK scaling of |K15 - G7| with a 50*eps roundoff floor.
- Local acceptance: a panel is done when its error is below tol * width / span, when it is
  roundoff limited, or when it is `MAX_DEPTH` bisections deep (then `converged=False`).
- Principal values by folding: a symmetric window around each simple pole x_r is integrated
  as int_0^h [f(x_r + d) + f(x_r - d)] dd, whose 1/d parts cancel pointwise. The
  denominator near the pole is taken from d itself so the cancellation stays exact.

Summation order of accepted panels is fixed, so results are bitwise reproducible.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Iterable, Iterator, Sequence
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from harvest.errors import PoleError, ValidationError

logger = logging.getLogger(__name__)

Integrand = Callable[[np.ndarray], np.ndarray]

MAX_DEPTH = 60
MAX_PANELS = 50_000
EPS = float(np.finfo(float).eps)

# Non-negative Kronrod nodes (descending) and weights; Gauss nodes are every other one.
_XK_POS = np.array(
    [
        0.991455371120812639206854697526329,
        0.949107912342758524526189684047851,
        0.864864423359769072789712788640926,
        0.741531185599394439863864773280788,
        0.586087235467691130294144845693013,
        0.405845151377397166906606412076961,
        0.207784955007898467600689403773245,
        0.000000000000000000000000000000000,
    ]
)
_WK_POS = np.array(
    [
        0.022935322010529224963732008058970,
        0.063092092629978553290700663189204,
        0.104790010322250183839876322541518,
        0.140653259715525918745189590510238,
        0.169004726639267902826583426598550,
        0.190350578064785409913256402421014,
        0.204432940075298892414161999234649,
        0.209482141084727828012999174891714,
    ]
)
_WG_POS = np.array(
    [
        0.0,
        0.129484966168869693270611432679082,
        0.0,
        0.279705391489276667901467771423780,
        0.0,
        0.381830050505118944950369775488975,
        0.0,
        0.417959183673469387755102040816327,
    ]
)


def _mirror(pos: np.ndarray, sign: float) -> np.ndarray:
    return np.concatenate([sign * pos[:-1], pos[-1:], pos[:-1][::-1]])


NODES = _mirror(_XK_POS, -1.0)
KRONROD_WEIGHTS = _mirror(_WK_POS, 1.0)
GAUSS_WEIGHTS = _mirror(_WG_POS, 1.0)


# ---------------------------
# Result types
# ---------------------------


@dataclass(frozen=True)
class QuadratureResult:
    value: float | complex
    abs_error_estimate: float
    evaluations: int
    converged: bool

    def __add__(self, other: QuadratureResult) -> QuadratureResult:
        return QuadratureResult(
            value=self.value + other.value,
            abs_error_estimate=self.abs_error_estimate + other.abs_error_estimate,
            evaluations=self.evaluations + other.evaluations,
            converged=self.converged and other.converged,
        )

    def scaled(self, factor: float | complex) -> QuadratureResult:
        return QuadratureResult(
            value=self.value * factor,
            abs_error_estimate=self.abs_error_estimate * abs(factor),
            evaluations=self.evaluations,
            converged=self.converged,
        )

    @classmethod
    def zero(cls) -> QuadratureResult:
        return cls(value=0.0, abs_error_estimate=0.0, evaluations=0, converged=True)

    @classmethod
    def total(cls, parts: Iterable[QuadratureResult]) -> QuadratureResult:
        out = cls.zero()
        for part in parts:
            out = out + part
        return out


@dataclass(frozen=True)
class PoleSet:
    """Simple poles of a real denominator: positions and |du/dx| at each."""

    locations: tuple[float, ...] = ()
    derivative_magnitudes: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        locs = tuple(float(x) for x in self.locations)
        mags = tuple(float(m) for m in self.derivative_magnitudes)
        object.__setattr__(self, "locations", locs)
        object.__setattr__(self, "derivative_magnitudes", mags)
        if len(locs) != len(mags):
            raise ValidationError("PoleSet needs one derivative magnitude per location")
        if any(not (math.isfinite(m) and m > 0) for m in mags):
            raise ValidationError(f"PoleSet derivative magnitudes must be finite and > 0, got {mags}")
        if any(b <= a for a, b in zip(locs, locs[1:], strict=False)):
            raise ValidationError(f"PoleSet locations must be strictly increasing, got {locs}")

    def __len__(self) -> int:
        return len(self.locations)

    def __iter__(self) -> Iterator[tuple[float, float]]:
        return iter(zip(self.locations, self.derivative_magnitudes, strict=True))

    def inside(self, lo: float, hi: float, margin: float = 0.0) -> PoleSet:
        """Poles strictly inside (lo + margin, hi - margin)."""
        kept = [(x, m) for x, m in self if lo + margin < x < hi - margin]
        return PoleSet(tuple(x for x, _ in kept), tuple(m for _, m in kept))

    def mirrored(self) -> PoleSet:
        """Poles of u(-x) given poles of u(x)."""
        pairs = sorted((-x, m) for x, m in self)
        return PoleSet(tuple(x for x, _ in pairs), tuple(m for _, m in pairs))


# ---------------------------
# Helpers
# ---------------------------


def _call(f: Callable, x: np.ndarray) -> np.ndarray:
    return np.broadcast_to(np.asarray(f(x)), np.shape(x))


def pointwise(fn: Callable[[float], complex], otype: type = complex) -> Integrand:
    """Wrap a scalar-only integrand so it can be handed to the vectorized rules."""
    return np.vectorize(fn, otypes=[otype])


def _kronrod_panels(
    f: Integrand,
    a: np.ndarray,
    b: np.ndarray,
    magnitude: Integrand | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    center = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x = center[:, None] + half[:, None] * NODES[None, :]
    fx = _call(f, x)

    kronrod = fx @ KRONROD_WEIGHTS
    gauss = fx @ GAUSS_WEIGHTS
    resabs = np.abs(fx) @ KRONROD_WEIGHTS
    resasc = np.abs(fx - 0.5 * kronrod[:, None]) @ KRONROD_WEIGHTS

    width = np.abs(half)
    value = kronrod * half
    err = np.abs(kronrod - gauss) * width
    resasc = resasc * width
    if magnitude is not None:
        resabs = resabs + np.abs(_call(magnitude, x)) @ KRONROD_WEIGHTS
    floor = 50.0 * EPS * resabs * width

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where(resasc > 0, scaled, err)
    err = np.maximum(err, floor)
    return value, err, floor


# ---------------------------
# Integration
# ---------------------------


def integrate_finite(
    f: Integrand,
    lo: float,
    hi: float,
    tol: float = 1e-10,
    *,
    points: Sequence[float] = (),
    max_depth: int = MAX_DEPTH,
    magnitude: Integrand | None = None,
) -> QuadratureResult:
    """
    Integral of f over [lo, hi] to absolute tolerance `tol`.

    `points` are interior subdivision points (kinks, jumps, near-singularities).
    `magnitude` is the pointwise size of terms that cancel inside f; it raises the
    roundoff floor below which a panel is accepted as resolved.
    Depth exhaustion, non-finite panels and panel-count overflow return
    `converged=False` instead of raising.
    """
    lo, hi = float(lo), float(hi)
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ValidationError(f"integration interval must be finite with lo < hi, got [{lo}, {hi}]")
    if not tol > 0:
        raise ValidationError(f"tolerance must be > 0, got {tol}")

    edges = np.unique(np.array([lo, hi, *(float(p) for p in points if lo < p < hi)], dtype=float))
    a, b = edges[:-1], edges[1:]
    depth = np.zeros(a.size, dtype=int)
    span = hi - lo

    total: float | complex = 0.0
    error = 0.0
    roundoff = 0.0
    evaluations = 0
    converged = True

    while a.size:
        values, errors, floor = _kronrod_panels(f, a, b, magnitude)
        evaluations += NODES.size * a.size

        good = errors <= tol * (b - a) / span
        finite = np.isfinite(values) & np.isfinite(errors)
        mid = 0.5 * (a + b)
        splittable = (depth < max_depth) & (mid > a) & (mid < b)
        done = good | (errors <= floor) | ~finite | ~splittable
        if a.size > MAX_PANELS:
            done[:] = True
        if np.any(done & ~good & ~(errors <= floor)):
            converged = False

        total = total + values[done].sum()
        error += float(errors[done].sum())
        roundoff += float(floor[done].sum())

        keep = ~done
        a, b = np.concatenate([a[keep], mid[keep]]), np.concatenate([mid[keep], b[keep]])
        depth = np.concatenate([depth[keep] + 1, depth[keep] + 1])

    if not math.isfinite(error):
        converged = False
    # panels held at their roundoff floor count as resolved
    converged = converged and error <= tol + roundoff
    if not converged:
        logger.debug("integrate_finite [%g, %g]: error %.3e > tol %.3e", lo, hi, error, tol)

    value = complex(total) if np.iscomplexobj(total) else float(total)
    return QuadratureResult(value=value, abs_error_estimate=error, evaluations=evaluations, converged=converged)


def _truncation_point(f: Integrand, tol: float) -> float:
    b = 1.0
    for _ in range(40):
        xs = np.linspace(b, 2.0 * b, 33)
        envelope = float(np.max(np.abs(_call(f, xs))))
        if envelope * 2.0 * b <= 1e-3 * tol:
            return 2.0 * b
        b *= 2.0
    raise ValidationError("integrand does not decay on [0, inf); cannot choose a truncation point")


def integrate_semi_infinite(
    f: Integrand,
    tol: float = 1e-10,
    *,
    upper: float | None = None,
    points: Sequence[float] = (),
) -> QuadratureResult:
    """
    Integral of f over [0, inf).

    With `upper` the caller supplies the truncation point (e.g. where a Gaussian envelope
    has fallen below 1e-18 of its peak); otherwise the tail is probed on doubling intervals.
    """
    if upper is None:
        upper = _truncation_point(f, tol)
    return integrate_finite(f, 0.0, upper, tol, points=points)


Near = Callable[[float, np.ndarray], np.ndarray]


def _pole_windows(locs: np.ndarray, lo: float, hi: float, max_window: float) -> np.ndarray:
    """Half-widths of disjoint symmetric windows around sorted poles, kept inside [lo, hi]."""
    gaps = 0.5 * np.diff(locs)
    room_left = np.concatenate([[locs[0] - lo], gaps])
    room_right = np.concatenate([gaps, [hi - locs[-1]]])
    return np.minimum(np.minimum(room_left, room_right), max_window)


def _secant_near(u: Integrand, poles: PoleSet, half: np.ndarray) -> Near:
    """
    u(x_r + d) rebuilt from d as d * u(x) / (x - x_r), x = fl(x_r + d).

    Exact for linear u; callers whose u cancels near its zeros pass their own `near`.
    """
    # u is monotone across each simple pole within its window.
    signs = np.where(_call(u, np.array(poles.locations) + 0.5 * half) >= 0, 1.0, -1.0)
    slopes = {x_r: s * m for (x_r, m), s in zip(poles, signs, strict=True)}

    def near(x_r: float, d: np.ndarray) -> np.ndarray:
        x = x_r + d
        step = x - x_r
        moved = step != 0
        secant = np.where(moved, _call(u, x) / np.where(moved, step, 1.0), slopes[x_r])
        return secant * d

    return near


def _folded_window(g: Integrand, near: Near, x_r: float, h: float, m: float, tol: float, points) -> QuadratureResult:
    """int_0^h [g/u (x_r + d) + g/u (x_r - d)] dd; the +-1/d parts cancel inside the integrand."""
    g_r = abs(complex(_call(g, np.array(x_r))))

    def folded(d: np.ndarray) -> np.ndarray:
        return _call(g, x_r + d) / near(x_r, d) + _call(g, x_r - d) / near(x_r, -d)

    def size(d: np.ndarray) -> np.ndarray:
        return 2.0 * g_r / (m * d)

    pts = [abs(p - x_r) for p in points if 0.0 < abs(p - x_r) < h]
    return integrate_finite(folded, 0.0, h, tol, points=pts, magnitude=size)


def integrate_pv(
    g: Integrand,
    u: Integrand,
    poles: PoleSet,
    lo: float,
    hi: float,
    tol: float = 1e-10,
    *,
    near: Near | None = None,
    points: Sequence[float] = (),
    max_window: float = 1.0,
) -> QuadratureResult:
    """
    Cauchy principal value of the integral of g/u over [lo, hi]; u has the simple zeros in `poles`.

    Each pole x_r owns a window |x - x_r| < h_r that is integrated folded, over d in (0, h_r),
    so no node lands on or next to the pole. `near(x_r, d)` must return u(x_r + d) with
    relative accuracy in d; the default rebuilds it from a secant. The rest of [lo, hi] is
    integrated directly. The tolerance is shared out in proportion to length.
    """
    lo, hi = float(lo), float(hi)

    def direct(x: np.ndarray) -> np.ndarray:
        return _call(g, x) / _call(u, x)

    if not len(poles):
        return integrate_finite(direct, lo, hi, tol, points=points)

    for x_r in poles.locations:
        if not lo < x_r < hi or min(x_r - lo, hi - x_r) <= 10.0 * EPS * max(1.0, abs(x_r)):
            raise PoleError(f"pole at {x_r!r} is not strictly inside [{lo!r}, {hi!r}]")

    locs = np.array(poles.locations)
    half = _pole_windows(locs, lo, hi, max_window)
    if near is None:
        near = _secant_near(u, poles, half)
    span = hi - lo

    parts = []
    edges = [lo, *np.column_stack([locs - half, locs + half]).ravel().tolist(), hi]
    for left, right in zip(edges[0::2], edges[1::2], strict=True):
        if right > left:
            pts = [p for p in points if left < p < right]
            parts.append(integrate_finite(direct, left, right, tol * (right - left) / span, points=pts))
    for (x_r, m), h in zip(poles, half.tolist(), strict=True):
        parts.append(_folded_window(g, near, x_r, h, m, tol * 2.0 * h / span, points))
    return QuadratureResult.total(parts)


# ---------------------------
# Root bracketing
# ---------------------------


def bracket_roots(
    g: Callable,
    lo: float,
    hi: float,
    scan_points: int = 200,
    *,
    extra_points: Sequence[float] = (),
) -> list[float]:
    """
    All sign-change roots of g on [lo, hi], ascending.

    g is scanned on a uniform grid (plus `extra_points`, e.g. a located minimum) and every
    sign change is refined with Brent's method to ~1e-13 * max(1, |root|). Roots closer
    together than the grid spacing, and even-multiplicity roots, can be missed.
    """
    if scan_points < 2:
        raise ValidationError(f"scan_points must be >= 2, got {scan_points}")
    grid = np.linspace(lo, hi, scan_points)
    extras = [float(p) for p in extra_points if lo <= p <= hi]
    if extras:
        grid = np.unique(np.concatenate([grid, extras]))
    values = _call(g, grid).astype(float)

    def scalar(x: float) -> float:
        return float(g(x))

    roots: list[float] = []
    for i, (x, v) in enumerate(zip(grid, values, strict=True)):
        if v == 0.0:
            roots.append(float(x))
            continue
        if i + 1 == grid.size:
            break
        w = values[i + 1]
        if w != 0.0 and (v < 0) != (w < 0):
            left, right = float(x), float(grid[i + 1])
            xtol = 0.5e-13 * max(1.0, min(abs(left), abs(right)))
            roots.append(optimize.brentq(scalar, left, right, xtol=xtol, rtol=4 * EPS, maxiter=200))
    return sorted(roots)
