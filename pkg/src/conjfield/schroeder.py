"""Schroeder's equation ``h(D(x)) = lam h(x)``.

``h`` comes from the Koenigs limit and ``h'`` from the companion infinite
product, both evaluated pointwise and then tabulated. The conjugation gives
fractional iterates ``D^t = h^{-1}(lam^t h)`` and the field
``v = log(lam) h / h'``.

On a subinterval where ``D`` pushes points away from the fixed end the
iteration runs on ``D^{-1}`` instead; ``h`` is the same function either way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import SplinterMap, Subinterval, solver_grid
from .errors import DivisionByZero, NonPositiveFactor, OutOfRange, PreconditionError, SlowConvergence
from .grid import GridFunction
from .numeric import Bracket, find_root
from .propagation import PropagationMap


def _check_inside(sub: Subinterval | None, x: np.ndarray) -> None:
    if sub is None:
        return
    inside = (x >= sub.lo) & (x <= sub.hi)
    if not np.all(inside):
        raise PreconditionError(f"points outside ({sub.lo}, {sub.hi}): {x[~inside][:3]}")


def koenigs_h(D: PropagationMap, sub: Subinterval | None, x, tol: float = 1e-14, n_max: int = 10_000):
    """``h(x) = lim mu^{-n} (T^n x - fp)`` with ``T`` the splinter step.

    Stops per point when successive estimates agree to relative ``tol``, or
    when the orbit reaches the cancellation floor ``1e-8 |fp|`` around a
    nonzero fixed point.

    Raises:
        SlowConvergence: ``n_max`` reached; ``partial`` holds the estimates.
    """
    orbit = SplinterMap(D, sub)
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    _check_inside(sub, x)
    fp, mu = orbit.fp, orbit.mu
    est = x - fp
    xn = x.copy()
    scale = np.ones_like(x)
    active = est != 0
    for _ in range(n_max):
        if not active.any():
            break
        xa = orbit.step(xn[active])
        sa = scale[active] / mu
        new = sa * (xa - fp)
        old = est[active]
        done = (np.abs(new - old) <= tol * np.abs(new)) | (new == 0) | (np.abs(xa - fp) <= orbit.floor())
        xn[active], scale[active], est[active] = xa, sa, new
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    else:
        if active.any():
            raise SlowConvergence(f"Koenigs limit not converged after {n_max} steps", partial=est)
    return float(est[0]) if scalar else est


def h_prime_product(D: PropagationMap, sub: Subinterval | None, x, tol: float = 1e-14, n_max: int = 10_000):
    """``h'(x) = prod_i T'(T^i x) / mu``.

    Raises:
        NonPositiveFactor: ``T'`` was not positive somewhere on the orbit.
        SlowConvergence: ``n_max`` reached.
    """
    orbit = SplinterMap(D, sub)
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    _check_inside(sub, x)
    fp, mu = orbit.fp, orbit.mu
    prod = np.ones_like(x)
    xn = x.copy()
    active = xn != fp
    for _ in range(n_max):
        if not active.any():
            break
        xa = xn[active]
        Tx = orbit.step(xa)
        d = orbit.slope(xa, Tx)
        if np.any(~(d > 0)):
            raise NonPositiveFactor(f"T'(x) = {d[~(d > 0)][0]} at x = {xa[~(d > 0)][0]}")
        factor = d / mu
        prod[active] *= factor
        done = (np.abs(factor - 1.0) <= tol) | (np.abs(Tx - fp) <= orbit.floor()) | (Tx == fp)
        xn[active] = Tx
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    else:
        if active.any():
            raise SlowConvergence(f"product for h' not converged after {n_max} steps", partial=prod)
    return float(prod[0]) if scalar else prod


@dataclass(frozen=True)
class ConjugationSolution:
    """Tabulated ``h`` and ``h'`` normalised by ``h(fp) = 0``, ``h'(fp) = 1``.

    Attributes:
        h, h_prime: Grid functions on the subinterval grid.
        lam: ``D'(fp)``, the Schroeder multiplier of ``D`` itself.
        base_fixed_point: ``fp``.
        residual_norm: ``max |h(T x) - mu h(x)|`` over the grid.
        sub: The subinterval solved on (None for the plain forward setting).
    """

    h: GridFunction
    h_prime: GridFunction
    lam: float
    base_fixed_point: float
    residual_norm: float
    sub: Subinterval | None = None


def _grid_with_attractor(D: PropagationMap, sub: Subinterval | None, n: int, interval) -> np.ndarray:
    if sub is None:
        lo, hi = interval if interval is not None else D.domain
        grid = np.linspace(lo, hi, n)
        fp = D.base_fixed_point
        if lo <= fp <= hi:
            grid = np.unique(np.append(grid, fp))
        return grid
    grid = solver_grid(sub, n)
    if sub.attractor_end == "lo":
        grid[0] = sub.lo
    else:
        grid[-1] = sub.hi
    return grid


def solve_schroeder(D: PropagationMap, sub: Subinterval | None = None, n: int = 401, tol: float = 1e-14,
                    n_max: int = 10_000, rule: str = "barycentric-rational", grid=None,
                    interval=None) -> ConjugationSolution:
    """Tabulate ``h`` and ``h'`` on a grid over ``sub``.

    The default grid is uniform with ``n`` points, keeps clear of the
    repelling fixed end, and includes the attractor itself.
    """
    grid = _grid_with_attractor(D, sub, n, interval) if grid is None else np.asarray(grid, dtype=float)
    orbit = SplinterMap(D, sub)
    h = koenigs_h(D, sub, grid, tol, n_max)
    hp = h_prime_product(D, sub, grid, tol, n_max)
    Tg = orbit.step(grid)
    resid = float(np.max(np.abs(koenigs_h(D, sub, Tg, tol, n_max) - orbit.mu * h)))
    lam = orbit.mu if sub is None or sub.direction == "forward" else 1.0 / orbit.mu
    return ConjugationSolution(GridFunction(grid, h, rule), GridFunction(grid, hp, rule), lam, orbit.fp,
                               resid, sub)


def flow(D: PropagationMap, conj: ConjugationSolution, x0: float, t: float, tol: float = 1e-13) -> float:
    """Fractional iterate ``D^t(x0) = h^{-1}(lam^t h(x0))``.

    ``h`` is evaluated pointwise by the Koenigs limit rather than from the
    table, and the inverse is solved for ``x - fp`` so that iterates close to
    the fixed point keep full relative accuracy. ``tol`` is relative.

    Raises:
        OutOfRange: the iterate leaves the tabulated range of ``h``;
            ``boundary_time`` is when it reaches the edge.
    """
    lo, hi = conj.h.hull
    if not lo <= x0 <= hi:
        raise PreconditionError(f"x0={x0} is outside the grid [{lo}, {hi}]")
    if t == 0:
        return float(x0)
    fp = conj.base_fixed_point
    h0 = float(koenigs_h(D, conj.sub, x0))
    if h0 == 0:
        return float(x0)
    target = conj.lam ** t * h0
    # the orbit stays on the side of fp where it started
    edge_x = hi if x0 > fp else lo
    h_edge = float(koenigs_h(D, conj.sub, edge_x))
    if abs(target) > abs(h_edge):
        tb = math.log(h_edge / h0) / math.log(conj.lam) if h_edge / h0 > 0 else math.nan
        raise OutOfRange(f"D^{t}({x0}) leaves the grid [{lo}, {hi}]", boundary_time=tb)
    if abs(target) == abs(h_edge):
        return float(edge_x)
    u_edge = edge_x - fp

    def resid(u):
        return float(koenigs_h(D, conj.sub, fp + u)) - target

    u = find_root(resid, Bracket(0.0, u_edge, -target, h_edge - target) if u_edge > 0
                  else Bracket(u_edge, 0.0, h_edge - target, -target),
                  tol=max(tol * abs(target) * 1e-3, 1e-300))
    return float(fp + u)


def field_from_h(conj: ConjugationSolution, x):
    """``v(x) = log(lam) h(x) / h'(x)``."""
    hp = np.asarray(conj.h_prime(x), dtype=float)
    if np.any(np.abs(hp) < 1e-300):
        raise DivisionByZero("h'(x) vanishes")
    v = math.log(conj.lam) * np.asarray(conj.h(x), dtype=float) / hp
    return float(v) if np.ndim(x) == 0 else v
