# harvest/services/specfun.py
"""
Overflow-safe real and complex error functions.

The heavy lifting is scipy.special: `erf`/`erfc`/`erfcx` for real arguments and `wofz`
(the Faddeeva function w(z) = exp(-z^2) erfc(-iz), region-split series /
continued-fraction implementation) for the scaled complex form that keeps
exp(-L^2/4) erfc(iL/2) finite at large separations.
"""

from __future__ import annotations

import math

from scipy import special

from harvest.errors import DomainError


def erf_real(x: float) -> float:
    return float(special.erf(x))


def erfc_real(x: float) -> float:
    """erfc(x) = 1 - erf(x); does not underflow before x ~ 26.5."""
    return float(special.erfc(x))


def erfcx_real(x: float) -> float:
    """exp(x^2) erfc(x) for x >= 0."""
    if x < 0:
        raise DomainError(f"erfcx_real expects x >= 0, got {x!r}")
    return float(special.erfcx(x))


def scaled_cerfc(z: complex) -> complex:
    """
    w(z) = exp(-z^2) * erfc(-i z) on the closed upper half plane.

    Only Im(z) >= 0 is used by the package; the lower half plane (where w grows
    like exp(y^2)) is rejected.
    """
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError(f"scaled_cerfc needs a finite argument, got {z!r}")
    if z.imag < 0:
        raise DomainError(f"scaled_cerfc is restricted to Im(z) >= 0, got {z!r}")
    return complex(special.wofz(z))
