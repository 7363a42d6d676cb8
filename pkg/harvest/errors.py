# harvest/errors.py
"""
Exception hierarchy.

Every error carries the process exit code the CLI reports for it:
  1  argument / validation problems
  2  numerical trouble (non-convergence, L_max bracket escape)
"""

from __future__ import annotations


class HarvestError(Exception):
    exit_code: int = 1


# ---------------------------
# Validation (exit 1)
# ---------------------------


class ValidationError(HarvestError, ValueError):
    exit_code = 1


class DomainError(ValidationError):
    """Argument outside the domain of a special function or closed form."""


class UnsupportedScenarioError(ValidationError):
    """Operation is not defined for the requested scenario."""


class PoleError(ValidationError):
    """A principal-value pole sits on (or numerically at) an integration endpoint."""


class DegenerateRootError(ValidationError):
    """A kernel denominator has a (near-)double root; the caller must subdivide in y-tilde."""

    def __init__(self, location: float, slope: float):
        super().__init__(f"degenerate root at x~={location:.17g} (|du/dx|={slope:.3e})")
        self.location = location
        self.slope = slope


# ---------------------------
# Numerical (exit 2)
# ---------------------------


class NumericalError(HarvestError):
    exit_code = 2


class NonConvergenceError(NumericalError):
    def __init__(self, what: str, abs_error: float, tol: float):
        super().__init__(f"{what} did not converge (error estimate {abs_error:.3e} > tol {tol:.3e})")
        self.abs_error = abs_error
        self.tol = tol


class BracketEscapeError(NumericalError):
    """Concurrence is still positive at the upper end of the L scan."""

    def __init__(self, l_hi: float):
        super().__init__(f"concurrence still positive at l_hi={l_hi:g}; raise --l-hi")
        self.l_hi = l_hi


# ---------------------------
# Outcomes reported as a status
# ---------------------------


class NoEntanglementError(HarvestError):
    """|X| <= P over the whole L scan: no harvesting at any separation."""

    exit_code = 0
