"""Numerical primitives: Gauss hypergeometric evaluation and root bracketing.

Nothing in here is domain-specific; the interference model needs
2F1(1, 2/eta; 1 + 2/eta; z) for z <= 0 and the spreading-factor layout
solver needs a deterministic scalar root finder with explicit failure
modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import hyp2f1 as _scipy_hyp2f1


@dataclass(frozen=True)
class Tolerance:
    """Relative/absolute tolerance pair plus an iteration budget."""

    rel: float = 1e-10
    abs: float = 1e-12
    max_iter: int = 10_000

    def __post_init__(self) -> None:
        if self.rel <= 0.0 or self.abs <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("iteration budget must be at least 1")


DEFAULT_TOL = Tolerance()


class NumericsError(RuntimeError):
    """Base class for numeric failures; carries diagnostic state."""


class ConvergenceError(NumericsError):
    pass


class BracketingError(NumericsError):
    pass


def hyp_2f1(a: float, b: float, c: float, z: float,
            tol: Tolerance = DEFAULT_TOL) -> float:
    """Gauss hypergeometric function 2F1(a, b; c; z) for z <= 0.

    Evaluation is delegated to scipy's C implementation, which applies the
    direct power series inside the unit disk and argument transformations
    (including the degenerate integer-difference cases) outside it.  The
    result is validated against the Euler-integral quadrature in the test
    suite over the full operating range z in [-1e8, 0].
    """
    if z > 0.0:
        raise ValueError(f"argument must satisfy z <= 0, got {z}")
    if c <= 0.0 and c == int(c):
        raise ValueError(f"c must not be a non-positive integer, got {c}")
    value = float(_scipy_hyp2f1(a, b, c, z))
    if not math.isfinite(value):
        raise ConvergenceError(
            f"2F1({a}, {b}; {c}; {z}) did not evaluate to a finite value "
            f"(got {value}); requested rel tol {tol.rel}")
    return value


@dataclass(frozen=True)
class RootResult:
    """Root estimate together with the final bracketing interval."""

    root: float
    lower: float
    upper: float
    iterations: int
    f_root: float


def bisect(f, lower: float, upper: float,
           tol: Tolerance = DEFAULT_TOL) -> RootResult:
    """Find a sign change of ``f`` on [lower, upper] by pure bisection.

    Deterministic: the returned interval always brackets a root and the
    midpoint sequence depends only on the inputs.  Raises BracketingError
    when f(lower) and f(upper) have the same sign, ConvergenceError when
    the interval does not shrink below tolerance within the budget.
    """
    if not lower < upper:
        raise ValueError(f"need lower < upper, got [{lower}, {upper}]")
    f_lo = f(lower)
    f_hi = f(upper)
    if f_lo == 0.0:
        return RootResult(lower, lower, lower, 0, 0.0)
    if f_hi == 0.0:
        return RootResult(upper, upper, upper, 0, 0.0)
    if math.copysign(1.0, f_lo) == math.copysign(1.0, f_hi):
        raise BracketingError(
            f"no sign change on [{lower}, {upper}]: "
            f"f(lower)={f_lo:.6g}, f(upper)={f_hi:.6g}")
    lo, hi = lower, upper
    for iteration in range(1, tol.max_iter + 1):
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if f_mid == 0.0 or (hi - lo) <= tol.abs + tol.rel * abs(mid):
            return RootResult(mid, lo, hi, iteration, f_mid)
        if math.copysign(1.0, f_mid) == math.copysign(1.0, f_lo):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    raise ConvergenceError(
        f"bisection stalled after {tol.max_iter} iterations; "
        f"interval [{lo}, {hi}] width {hi - lo:.3g} above tolerance")
