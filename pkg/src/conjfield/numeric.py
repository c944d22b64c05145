"""Scalar maps and the low-level numerics everything else leans on.

All callables handed to this module are expected to accept numpy arrays as
well as Python floats; the solvers evaluate whole grids at once.
"""

from __future__ import annotations

import math
import warnings
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import (
    DomainMarginWarning,
    InvalidBracket,
    MaxIterExceeded,
    NotMonotone,
    OutOfRange,
    PreconditionError,
)

MAX_ROOT_ITER = 200


def fd_step(x) -> np.ndarray | float:
    """Central-difference step ``max(1e-6, 1e-7 |x|)``."""
    return np.maximum(1e-6, 1e-7 * np.abs(x))


@dataclass(frozen=True)
class ScalarMap:
    """A real function of one real variable on a closed interval.

    Attributes:
        func: Vectorised evaluation ``x -> f(x)``.
        deriv: Optional analytic derivative. When absent, central differences
            are used.
        domain: ``(lo, hi)``; may be infinite.
    """

    func: Callable
    deriv: Callable | None = None
    domain: tuple[float, float] = (-math.inf, math.inf)

    def __call__(self, x):
        return self.func(x)

    def derivative(self, x):
        if self.deriv is not None:
            return self.deriv(x)
        if np.ndim(x) == 0:
            return numeric_derivative(self, float(x))
        return np.array([numeric_derivative(self, float(xi)) for xi in np.ravel(x)]).reshape(np.shape(x))


def _as_map(f) -> ScalarMap:
    return f if isinstance(f, ScalarMap) else ScalarMap(f)


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float
    f_lo: float
    f_hi: float

    @classmethod
    def around(cls, f, lo: float, hi: float) -> "Bracket":
        return cls(lo, hi, float(f(lo)), float(f(hi)))

    @property
    def valid(self) -> bool:
        return self.f_lo * self.f_hi <= 0


def find_root(f, bracket: Bracket, tol: float = 1e-12) -> float:
    """Root of ``f`` inside a sign-changing bracket.

    Brent's method (bisection safeguarded with secant/inverse-quadratic
    steps), capped at 200 iterations.

    Raises:
        InvalidBracket: ``f_lo`` and ``f_hi`` have the same strict sign.
        MaxIterExceeded: the cap was hit before the bracket shrank to ``tol``.
    """
    if tol <= 0:
        raise PreconditionError("tol must be positive")
    if not bracket.valid:
        raise InvalidBracket(
            f"no sign change on [{bracket.lo}, {bracket.hi}]: f={bracket.f_lo}, {bracket.f_hi}"
        )
    if bracket.f_lo == 0:
        return float(bracket.lo)
    if bracket.f_hi == 0:
        return float(bracket.hi)
    g = _as_map(f)
    root, info = optimize.brentq(
        lambda x: float(g(x)), bracket.lo, bracket.hi,
        xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=MAX_ROOT_ITER,
        full_output=True, disp=False,
    )
    if not info.converged:
        raise MaxIterExceeded(f"root finder stopped after {info.iterations} iterations", partial=root)
    return float(root)


def _check_monotone(f: ScalarMap, lo: float, hi: float, n: int = 65) -> int:
    xs = np.linspace(lo, hi, n)
    ys = np.asarray(f(xs), dtype=float)
    d = np.diff(ys)
    if np.all(d > 0):
        return 1
    if np.all(d < 0):
        return -1
    raise NotMonotone(f"function is not strictly monotone on [{lo}, {hi}]")


def invert_monotone(f, y: float, tol: float = 1e-12) -> float:
    """Solve ``f(x) = y`` for strictly monotone ``f`` on its (finite) domain."""
    g = _as_map(f)
    lo, hi = g.domain
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise PreconditionError("invert_monotone needs a finite domain")
    _check_monotone(g, lo, hi)
    f_lo, f_hi = float(g(lo)), float(g(hi))
    if not min(f_lo, f_hi) <= y <= max(f_lo, f_hi):
        raise OutOfRange(f"{y} is outside f([{lo}, {hi}]) = [{min(f_lo, f_hi)}, {max(f_lo, f_hi)}]")
    return find_root(lambda x: g(x) - y, Bracket(lo, hi, f_lo - y, f_hi - y), tol)


def invert_monotone_array(func, deriv, y, lo, hi, maxiter: int = 200) -> np.ndarray:
    """Vectorised inverse of an increasing function on per-point brackets.

    Safeguarded Newton: the bracket ``[lo, hi]`` is kept valid and any step
    that leaves it is replaced by bisection. Assumes ``func(lo) <= y <=
    func(hi)`` elementwise (points where this fails come back clipped to the
    nearer end).
    """
    scalar = np.ndim(y) == 0
    y = np.atleast_1d(np.asarray(y, dtype=float))
    lo = np.broadcast_to(np.asarray(lo, dtype=float), y.shape).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), y.shape).copy()
    x = 0.5 * (lo + hi)
    active = hi > lo
    x[~active] = lo[~active]
    for _ in range(maxiter):
        if not active.any():
            break
        xa = x[active]
        r = func(xa) - y[active]
        lo_a, hi_a = lo[active], hi[active]
        lo_a = np.where(r < 0, xa, lo_a)
        hi_a = np.where(r > 0, xa, hi_a)
        d = deriv(xa)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = xa - r / d
        bad = ~np.isfinite(step) | (step <= lo_a) | (step >= hi_a)
        new = np.where(bad, 0.5 * (lo_a + hi_a), step)
        new = np.where(r == 0, xa, new)
        lo[active], hi[active] = lo_a, hi_a
        done = (r == 0) | (np.abs(new - xa) <= 2 * np.finfo(float).eps * np.maximum(1.0, np.abs(xa))) \
            | (hi_a - lo_a <= 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(xa)))
        x[active] = new
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    return float(x[0]) if scalar else x


def numeric_derivative(f, x: float, h: float | None = None) -> float:
    """Central difference with step ``max(1e-6, 1e-7|x|)``.

    Falls back to a second-order one-sided stencil (with a
    :class:`DomainMarginWarning`) when ``x`` is within one step of a finite
    domain end.
    """
    g = _as_map(f)
    h = float(fd_step(x)) if h is None else h
    lo, hi = g.domain
    if x - h < lo or x + h > hi:
        warnings.warn(f"one-sided derivative at x={x}", DomainMarginWarning, stacklevel=2)
        s = 1.0 if x - h < lo else -1.0
        f0, f1, f2 = float(g(x)), float(g(x + s * h)), float(g(x + 2 * s * h))
        return s * (-3 * f0 + 4 * f1 - f2) / (2 * h)
    return (float(g(x + h)) - float(g(x - h))) / (2 * h)


def second_derivative(f, x: float) -> float:
    """Second derivative of ``f`` at ``x``.

    Differentiates the analytic first derivative when one exists; otherwise
    uses a three-point stencil with step ``sqrt(h_fd)``.
    """
    g = _as_map(f)
    if g.deriv is not None:
        return numeric_derivative(ScalarMap(g.deriv, None, g.domain), x)
    h = math.sqrt(float(fd_step(x)))
    lo, hi = g.domain
    if x - h < lo or x + h > hi:
        warnings.warn(f"one-sided second derivative at x={x}", DomainMarginWarning, stacklevel=2)
        s = 1.0 if x - h < lo else -1.0
        f0, f1, f2, f3 = (float(g(x + k * s * h)) for k in range(4))
        return (2 * f0 - 5 * f1 + 4 * f2 - f3) / h**2
    return (float(g(x + h)) - 2 * float(g(x)) + float(g(x - h))) / h**2
