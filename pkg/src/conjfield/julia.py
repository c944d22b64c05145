"""Julia's equation ``g(D(x)) = D'(x) g(x)`` with ``g'(fp) = 1``, and the field.

Three solvers:

* :func:`julia_infinite_product` evaluates ``g(x) = (x - fp) prod rho(T^n x)``
  pointwise along the splinter, where
  ``rho(x) = (T(x) - fp) / ((x - fp) T'(x))``.
* :func:`julia_fixed_point` iterates ``g_hat <- rho * G_hat(T(.))`` on a grid,
  with ``G_hat`` interpolating the current values.
* :func:`julia_least_squares` fits a parametric field to the residual of the
  equation written for ``v`` directly.

``T`` is ``D`` or ``D^{-1}``, whichever moves points toward the fixed end of
the subinterval. Both give the same normalised ``g``, and ``v = log(D'(fp)) g``
for every fixed point ``fp``, so the solutions on different subintervals
differ only by constant factors that :func:`glue_subintervals` recovers.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .barycentric import barycentric_matrix, floater_hormann
from .diagnostics import DiagnosticsReport, julia_residual
from .domain import FIXED_MARGIN, PRECISION_FLOOR, SINGULAR_MARGIN, SplinterMap, Subinterval, subdivide
from .errors import (
    ConstraintViolation,
    InconsistentSign,
    InterpolationOutOfHull,
    InvalidMultiplier,
    MaxIterExceeded,
    MismatchedEndpoints,
    NoFixedPointInClosure,
    NonFiniteRatio,
    PreconditionError,
    UndefinedSplinter,
)
from .fitting import ParametricModel, levenberg_marquardt
from .grid import FH_ORDER, GridFunction
from .propagation import PropagationMap

STAGNATION_SWEEPS = 100
STAGNATION_FACTOR = 1e4
TAIL_STOP = 1e-4


@dataclass
class FieldEstimate:
    """A recovered field ``v = log(lam) g``.

    Attributes:
        v, g: Grid functions on the same grid.
        lam: Multiplier at the base fixed point.
        parametric_form: ``(model, params)`` when the field was fitted.
        diagnostics: Residuals, errors and flags.
    """

    v: GridFunction
    lam: float
    g: GridFunction
    parametric_form: tuple | None = None
    diagnostics: DiagnosticsReport = field(default_factory=DiagnosticsReport)

    def __call__(self, x):
        if self.parametric_form is not None:
            model, params = self.parametric_form
            return model.eval(params, np.asarray(x, dtype=float))
        return self.v(x)


# --- Algorithm 1 -----------------------------------------------------------

def _tail_model(step: SplinterMap, sub: Subinterval | None, side: float, stop: float):
    """``u -> log prod_{k>=0} rho(T^k(fp + u))`` for small ``u`` on one side of fp.

    Fits ``T(fp + u) - fp = mu u + beta u^2`` and ``log rho = c u + d u^2``
    from two probes at ``10 stop`` and ``20 stop``, then sums the tail of
    the orbit in closed form. The neglected terms are ``O(u^3)``.
    """
    fp, mu = step.fp, step.mu
    reach = 20.0 * stop
    if sub is not None:
        room = (sub.hi - fp) if side > 0 else (fp - sub.lo)
        reach = min(reach, 0.5 * room)
    u = side * np.array([0.5 * reach, reach])
    with np.errstate(all="ignore"):
        Tu = step.step(fp + u)
        slope = step.slope(fp + u, Tu)
        log_rho = np.log((Tu - fp) / (u * slope))
    beta = float(np.mean((Tu - fp - mu * u) / u**2))
    A = np.column_stack([u, u * u])
    c, d = np.linalg.solve(A, log_rho)
    if not all(np.isfinite([beta, c, d])):
        return lambda t: 0.0

    def tail(t):
        s1 = t / (1.0 - mu) + beta * t * t / ((1.0 - mu) * (1.0 - mu * mu))
        s2 = t * t / (1.0 - mu * mu)
        return float(c * s1 + d * s2)

    return tail


def julia_infinite_product(D: PropagationMap, sub: Subinterval | None, x0, eps: float = 1e-14,
                           n_max: int = 10_000, toward: str | None = None):
    """``g(x0)`` normalised at the attractor of ``sub`` (or ``toward`` it).

    With ``sub=None`` the orbit is plain forward iteration of ``D`` toward
    the base fixed point and may leave the data hull, which lets maps such
    as a fitted Moebius transformation carry orbits through a pole.

    Raises:
        UndefinedSplinter: the orbit left ``sub`` or became non-finite.
        MaxIterExceeded: ``n_max`` steps; ``partial`` holds the estimates.
    """
    if toward is not None:
        if sub is None:
            raise PreconditionError("toward needs a subinterval")
        sub = sub.toward(toward)
    step = SplinterMap(D, sub)
    fp = step.fp
    scalar = np.ndim(x0) == 0
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if sub is not None and np.any((x0 < sub.lo) | (x0 > sub.hi)):
        raise PreconditionError(f"points outside ({sub.lo}, {sub.hi})")
    q = np.ones_like(x0)
    x = x0.copy()
    active = x != fp
    floor = step.floor()
    tails = {}
    if floor > 0:
        # rounding in rho grows like u / |x - fp|, so stop well before the
        # floor and sum the rest of the product from a local Taylor model
        floor = TAIL_STOP * floor / PRECISION_FLOOR
        for side in np.unique(np.sign(x0[active] - fp)):
            tails[side] = _tail_model(step, sub, float(side), floor)
    for _ in range(n_max):
        if not active.any():
            break
        xa = x[active]
        with np.errstate(all="ignore"):
            Tx = step.step(xa)
            d = step.slope(xa, Tx)
            factor = (Tx - fp) / ((xa - fp) * d)
        landed = Tx == fp
        factor = np.where(landed, 1.0, factor)
        if not np.all(np.isfinite(factor)) or not np.all(np.isfinite(Tx)):
            bad = xa[~(np.isfinite(factor) & np.isfinite(Tx))][0]
            raise UndefinedSplinter(f"orbit through {bad} is not defined (left the domain of D)")
        if sub is not None and np.any((Tx < sub.lo) | (Tx > sub.hi)):
            raise UndefinedSplinter(f"orbit left ({sub.lo}, {sub.hi}); subdivide first")
        qa = q[active]
        with np.errstate(over="ignore"):
            new = qa * factor
        at_floor = (np.abs(Tx - fp) <= floor) & ~landed
        done = (np.abs(new - qa) <= eps * np.abs(new)) | landed | at_floor
        if at_floor.any():
            u = Tx - fp
            tail = np.array([tails[np.sign(ui)](ui) if f else 0.0 for ui, f in zip(u, at_floor)])
            new = new * np.exp(tail)
        q[active], x[active] = new, Tx
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    else:
        if active.any():
            raise MaxIterExceeded(f"product not converged after {n_max} steps", partial=(x0 - fp) * q)
    g = (x0 - fp) * q
    return float(g[0]) if scalar else g


# --- Algorithm 2 -----------------------------------------------------------

def _interp_operator(nodes: np.ndarray, targets: np.ndarray, rule: str):
    """Return ``apply(values) -> interpolant(targets)`` for the given rule."""
    if rule == "barycentric-rational":
        L = barycentric_matrix(floater_hormann(nodes, np.ones_like(nodes), min(FH_ORDER, nodes.size - 1)), targets)
        return lambda v: L @ v
    if rule == "linear":
        idx = np.clip(np.searchsorted(nodes, targets, side="right") - 1, 0, nodes.size - 2)
        w = (targets - nodes[idx]) / (nodes[idx + 1] - nodes[idx])
        return lambda v: (1.0 - w) * v[idx] + w * v[idx + 1]
    if rule == "monotone-cubic":
        return lambda v: PchipInterpolator(nodes, v)(targets)
    raise PreconditionError(f"unknown rule {rule!r}")


def _gap_fill(xs: np.ndarray, fp: float) -> np.ndarray:
    """Nodes between ``fp`` and the nearest grid point at the median grid spacing.

    A wide gap next to the anchor node inflates the Lebesgue constant of the
    interpolant and leaves a rounding floor far above ``eps``.
    """
    if xs.size < 2:
        return np.empty(0)
    h = float(np.median(np.diff(np.sort(xs))))
    near = xs[np.argmin(np.abs(xs - fp))]
    m = int(np.ceil(abs(near - fp) / h))
    return np.linspace(fp, near, m + 1)[1:-1] if m > 1 else np.empty(0)


def _fixed_point_piece(D, sub: Subinterval, xs, eps, n_max, rule) -> GridFunction:
    step = SplinterMap(D, sub)
    fp = step.fp
    xs = np.asarray(xs, dtype=float)
    xs = xs[xs != fp]
    nodes = np.sort(np.concatenate([xs, _gap_fill(xs, fp), [fp]]))
    k = int(np.searchsorted(nodes, fp))
    other = np.delete(np.arange(nodes.size), k)
    xo = nodes[other]
    Tx = step.step(xo)
    dT = step.slope(xo, Tx)
    rho = (Tx - fp) / ((xo - fp) * dT)
    if np.any((Tx < nodes[0]) | (Tx > nodes[-1])):
        raise InterpolationOutOfHull("T(x) leaves the grid hull")
    if not np.all(np.isfinite(rho)):
        raise UndefinedSplinter("rho is not finite on the grid")
    apply = _interp_operator(nodes, Tx, rule)
    ghat = np.ones(nodes.size)
    best, since_best = math.inf, 0
    for _ in range(n_max):
        new = rho * apply(ghat)
        delta = np.max(np.abs(new - ghat[other])) / max(np.max(np.abs(new)), 1e-300)
        ghat[other] = new
        if delta <= eps:
            break
        # rounding in the interpolation matrix can leave a floor slightly above eps
        if delta < 0.5 * best:
            best, since_best = delta, 0
        else:
            since_best += 1
        if since_best >= STAGNATION_SWEEPS and best <= STAGNATION_FACTOR * eps:
            break
    else:
        raise MaxIterExceeded(f"fixed-point iteration not converged after {n_max} sweeps",
                              partial=GridFunction(nodes, (nodes - fp) * ghat, rule, fp, 1.0))
    return GridFunction(nodes, (nodes - fp) * ghat, rule, fp, 1.0)


def solvable_pieces(D: PropagationMap, points) -> list[tuple[Subinterval, np.ndarray]]:
    """Subdivide the span of ``D.domain`` and ``points``; assign points to pieces.

    Points on fixed points are dropped (``g`` vanishes there). Raises
    :class:`NoFixedPointInClosure` when a piece holding points has no fixed end.
    """
    points = np.asarray(points, dtype=float)
    lo = min(D.domain[0], float(points.min()))
    hi = max(D.domain[1], float(points.max()))
    out = []
    for sub in subdivide(D, (lo, hi)):
        inside = points[sub.holds(points)]
        if inside.size == 0:
            continue
        if sub.attractor_end is None:
            raise NoFixedPointInClosure(f"({sub.lo}, {sub.hi}) has no fixed end")
        out.append((sub, inside))
    return out


def drop_near_fixed(sub: Subinterval, xs) -> np.ndarray:
    """Remove points within the solver margin of a fixed end of ``sub``."""
    xs = np.asarray(xs, dtype=float)
    keep = np.ones(xs.size, dtype=bool)
    if sub.lo_fixed:
        m = (SINGULAR_MARGIN if sub.lo_singular else FIXED_MARGIN) * sub.width
        keep &= xs >= sub.lo + m
    if sub.hi_fixed:
        m = (SINGULAR_MARGIN if sub.hi_singular else FIXED_MARGIN) * sub.width
        keep &= xs <= sub.hi - m
    return xs[keep]


def julia_fixed_point(D: PropagationMap, grid, eps: float = 1e-12, n_max: int = 10_000,
                      rule: str = "barycentric-rational", sub: Subinterval | None = None) -> GridFunction:
    """Tabulated ``g`` from the fixed-point iteration, starting at ``g_hat = 1``.

    On each subinterval the attractor is added as an anchor node where
    ``g_hat = 1`` (the normalisation ``g'(fp) = 1``), so the interpolant is
    never asked to extrapolate. With ``sub=None`` the grid is split across
    all subintervals and the pieces are glued.

    Raises:
        MaxIterExceeded: no convergence to ``max|dg|/max|g| <= eps``.
        InterpolationOutOfHull: ``T`` maps a node outside the node hull.
    """
    grid = np.asarray(grid, dtype=float)
    if sub is not None:
        return _fixed_point_piece(D, sub, grid[sub.holds(grid)], eps, n_max, rule)
    parts = [(s, _fixed_point_piece(D, s, xs, eps, n_max, rule)) for s, xs in solvable_pieces(D, grid)]
    return glue_subintervals(D, parts)


# --- least squares ---------------------------------------------------------

def constrained_polynomial_field(degree: int, lam: float, fp: float = 0.0) -> ParametricModel:
    """``v_p(x) = log(lam) (x - fp) + sum_{k=2}^{degree} p_k (x - fp)^k``.

    No constant term and a fixed linear coefficient, so ``v_p(fp) = 0`` and
    ``v_p'(fp) = log(lam)`` hold for every ``p``.
    """
    if degree < 2:
        raise PreconditionError("degree must be at least 2")
    c1 = math.log(lam)
    powers = np.arange(2, degree + 1)

    def basis(x):
        return (np.atleast_1d(np.asarray(x, dtype=float))[:, None] - fp) ** powers[None, :]

    def ev(p, x):
        out = c1 * (np.atleast_1d(np.asarray(x, dtype=float)) - fp) + basis(x) @ np.asarray(p, dtype=float)
        return float(out[0]) if np.ndim(x) == 0 else out

    def dx(p, x):
        d = np.atleast_1d(np.asarray(x, dtype=float))[:, None] - fp
        out = c1 + (powers * np.asarray(p, dtype=float) * d ** (powers - 1)).sum(axis=1)
        return float(out[0]) if np.ndim(x) == 0 else out

    terms = " + ".join(f"p{k} (x - fp)^{k}" for k in powers)
    return ParametricModel(degree - 1, ev, dx, f"log(lam) (x - fp) + {terms}", lambda p, x: basis(x))


def julia_least_squares(D: PropagationMap, collocation, model: ParametricModel | None = None,
                        init=None, degree: int = 3) -> FieldEstimate:
    """Fit ``v_p`` minimising ``sum_j (v_p(D x_j) - D'(x_j) v_p(x_j))^2``.

    The model must already satisfy ``v_p(fp) = 0`` and
    ``v_p'(fp) = log(D'(fp))``; the default is
    :func:`constrained_polynomial_field` of the given degree.

    Raises:
        ConstraintViolation: the model breaks either constraint.
    """
    fp, lam = D.base_fixed_point, D.lam
    if not (0 < lam and lam != 1 and np.isfinite(lam)):
        raise InvalidMultiplier(f"multiplier {lam} is not usable")
    model = constrained_polynomial_field(degree, lam, fp) if model is None else model
    x = np.unique(np.asarray(collocation, dtype=float))
    if x.size < model.arity:
        raise PreconditionError(f"{x.size} collocation points for {model.arity} parameters")
    p0 = np.zeros(model.arity) if init is None else np.asarray(init, dtype=float)
    c1 = math.log(lam)
    v0 = float(np.atleast_1d(model.eval(p0, np.array([fp])))[0])
    dv0 = float(np.atleast_1d(model.deriv_x(p0, np.array([fp])))[0])
    if abs(v0) > 1e-10 * (1.0 + abs(c1)) or abs(dv0 - c1) > 1e-8 * abs(c1):
        raise ConstraintViolation(f"model gives v(fp)={v0}, v'(fp)={dv0}; need 0 and {c1}")
    Dx = np.asarray(D(x), dtype=float)
    dD = np.asarray(D.derivative(x), dtype=float)

    def residual(p):
        return model.eval(p, Dx) - dD * model.eval(p, x)

    def jac(p):
        return model.jacobian(p, Dx) - dD[:, None] * model.jacobian(p, x)

    p, cost, _ = levenberg_marquardt(residual, jac, p0)
    v = model.eval(p, x)
    est = FieldEstimate(GridFunction(x, v, "monotone-cubic" if x.size > 1 else "linear"), lam,
                        GridFunction(x, v / c1, "monotone-cubic"), (model, p))
    est.diagnostics.julia_residual = float(np.sqrt(cost))
    return est


# --- gluing and assembly ---------------------------------------------------

def fixed_point_scales(D: PropagationMap, subs, base: float | None = None, eps: float = 1e-14) -> dict:
    """Factor ``s[fp]`` with ``g_global = s[fp] g_fp`` near each fixed point.

    ``g_fp`` is the solution normalised at ``fp``. On a subinterval with two
    regular fixed ends the two normalised solutions are proportional; the
    ratio is measured at the midpoint by running the product toward each end.
    """
    base = D.base_fixed_point if base is None else base
    links: dict[float, list[tuple[float, float]]] = {}
    for s in subs:
        if not (s.lo_fixed and s.hi_fixed) or s.lo_singular or s.hi_singular:
            continue
        m = 0.5 * (s.lo + s.hi)
        g_lo = julia_infinite_product(D, s, m, eps, toward="lo")
        g_hi = julia_infinite_product(D, s, m, eps, toward="hi")
        r = g_lo / g_hi
        if not np.isfinite(r) or r == 0:
            raise NonFiniteRatio(f"normalisation ratio on ({s.lo}, {s.hi}) is {r}")
        links.setdefault(s.lo, []).append((s.hi, r))
        links.setdefault(s.hi, []).append((s.lo, 1.0 / r))
    ends = {s.attractor for s in subs if s.attractor_end is not None}
    start = min(ends | set(links), key=lambda p: abs(p - base)) if (ends or links) else base
    scales = {start: 1.0}
    queue = deque([start])
    while queue:
        p = queue.popleft()
        for q, r in links.get(p, []):
            if q not in scales:
                scales[q] = scales[p] * r
                queue.append(q)
    return scales


def glue_subintervals(D: PropagationMap, parts) -> GridFunction:
    """Join per-subinterval solutions into one ``g`` with ``g'(base) = 1``.

    ``parts`` is a list of ``(Subinterval, GridFunction)`` with each grid
    function normalised at its own subinterval's attractor. Fixed points
    between parts are added as nodes with ``g = 0``.

    Raises:
        MismatchedEndpoints: consecutive parts do not share a fixed point.
        NonFiniteRatio: a part cannot be related to the base normalisation.
    """
    parts = sorted(parts, key=lambda item: item[0].lo)
    if len(parts) == 1:
        return parts[0][1]
    for (a, _), (b, _) in zip(parts[:-1], parts[1:]):
        tol = 1e-9 * (1.0 + abs(a.hi))
        if abs(a.hi - b.lo) > tol or not (a.hi_fixed and b.lo_fixed):
            raise MismatchedEndpoints(f"({a.lo}, {a.hi}) and ({b.lo}, {b.hi}) do not meet at a fixed point")
    subs = [s for s, _ in parts]
    scales = fixed_point_scales(D, subs)
    xs, vs = [], []
    for s, gf in parts:
        fp = s.attractor
        if fp not in scales:
            raise NonFiniteRatio(f"no normalisation path from the base fixed point to {fp}")
        keep = gf.grid != fp
        xs.append(gf.grid[keep])
        vs.append(scales[fp] * gf.values[keep])
        for end, fixed in ((s.lo, s.lo_fixed), (s.hi, s.hi_fixed)):
            if fixed:
                xs.append(np.array([end]))
                vs.append(np.array([0.0]))
    x = np.concatenate(xs)
    v = np.concatenate(vs)
    x, idx = np.unique(x, return_index=True)
    v = v[idx]
    base = D.base_fixed_point
    origin = base if np.any(x == base) else None
    return GridFunction(x, v, parts[0][1].rule, origin, 1.0)


def assemble_field(g: GridFunction, lam: float) -> FieldEstimate:
    """``v = log(lam) g``."""
    if not (np.isfinite(lam) and lam > 0 and lam != 1):
        raise InvalidMultiplier(f"multiplier must be positive and not 1, got {lam}")
    return FieldEstimate(g.scaled(math.log(lam)), lam, g)


def _product_on(D: PropagationMap, x: np.ndarray, eps: float, strategy: str):
    """Algorithm-1 values of the globally normalised ``g`` at ``x``."""
    if strategy == "forward":
        return julia_infinite_product(D, None, x, eps), None
    pieces = solvable_pieces(D, x)
    scales = fixed_point_scales(D, [s for s, _ in pieces], eps=eps)
    g = np.zeros_like(x)
    for s, xs in pieces:
        if s.attractor not in scales:
            raise NonFiniteRatio(f"no normalisation path to {s.attractor}")
        mask = s.holds(x)
        g[mask] = scales[s.attractor] * julia_infinite_product(D, s, x[mask], eps)
    return g, pieces


def _product_residual(D, x, eps, strategy) -> float:
    """Relative Julia residual of the product solution on (up to) 64 points."""
    if strategy == "forward":
        pts = x[x != D.base_fixed_point][:: max(1, x.size // 64)]
        g = lambda z: julia_infinite_product(D, None, z, eps)
        with np.errstate(all="ignore"):
            ok = np.isfinite(np.asarray(D(pts), dtype=float))
        pts = pts[ok]
        return julia_residual(D, g, pts) / max(float(np.max(np.abs(g(pts)))), 1e-300)
    worst = 0.0
    for s, xs in solvable_pieces(D, x):
        pts = xs[:: max(1, xs.size // 64)]
        g = lambda z, s=s: julia_infinite_product(D, s, z, eps)
        worst = max(worst, julia_residual(D, g, pts, s) / max(float(np.max(np.abs(g(pts)))), 1e-300))
    return worst


def recover_field(D: PropagationMap, solver: str = "fixed-point", grid=None, n: int = 401, interval=None,
                  eps: float | None = None, rule: str = "barycentric-rational", strategy: str = "auto",
                  degree: int = 3) -> FieldEstimate:
    """Solve for ``g`` with the chosen method and return ``v = log(lam) g``.

    Args:
        solver: ``"product"``, ``"fixed-point"`` or ``"least-squares"``.
        grid: Evaluation grid; default ``n`` uniform points on ``interval``
            (default: the map's domain).
        strategy: For the product solver, ``"subdivide"`` runs each piece
            toward its own fixed end and glues, ``"forward"`` iterates ``D``
            toward the base fixed point everywhere, ``"auto"`` tries the first
            and falls back to the second when the subdivision is unusable.
    """
    lo, hi = D.domain if interval is None else interval
    x = np.linspace(lo, hi, n) if grid is None else np.unique(np.asarray(grid, dtype=float))
    lam = D.lam
    report_flags = []
    if solver == "least-squares":
        return julia_least_squares(D, x, degree=degree)
    if solver == "product":
        eps = 1e-14 if eps is None else eps
        if strategy == "auto":
            try:
                g, _ = _product_on(D, x, eps, "subdivide")
            except (InconsistentSign, NoFixedPointInClosure, UndefinedSplinter, NonFiniteRatio):
                g, _ = _product_on(D, x, eps, "forward")
                report_flags.append("forward-iteration")
        else:
            g, _ = _product_on(D, x, eps, strategy)
        gf = GridFunction(x, g, rule)
        est = assemble_field(gf, lam)
        est.diagnostics.julia_residual = _product_residual(D, x, eps, "forward" if report_flags else strategy)
    elif solver == "fixed-point":
        eps = 1e-12 if eps is None else eps
        pieces = solvable_pieces(D, x)
        parts = []
        for s, xs in pieces:
            xs = drop_near_fixed(s, xs)
            if xs.size:
                parts.append((s, _fixed_point_piece(D, s, xs, eps, 10_000, rule)))
        if not parts:
            raise PreconditionError("no grid points left after removing fixed-point margins")
        residual = max(julia_residual(D, gf, gf.grid[gf.grid != s.attractor], s) / max(np.max(np.abs(gf.values)), 1e-300)
                       for s, gf in parts)
        est = assemble_field(glue_subintervals(D, parts), lam)
        est.diagnostics.julia_residual = residual
    else:
        raise PreconditionError(f"unknown solver {solver!r}")
    est.diagnostics.flag(*report_flags, *D.flags)
    lo_h, hi_h = D.domain
    if x.min() < lo_h or x.max() > hi_h:
        est.diagnostics.flag("extrapolated-beyond-data")
    return est
