"""Fixed points of ``D``, the subdivision they induce, and splinters.

Between two consecutive fixed points ``D(z) - z`` keeps one sign, so orbits
run monotonically toward one end. Each :class:`Subinterval` records which
end attracts and whether ``D`` (forward) or ``D^{-1}`` (backward) gets there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    InconsistentSign,
    MaxIterExceeded,
    NoFixedPointInClosure,
    NonMonotoneSequence,
    PreconditionError,
)
from .numeric import Bracket, find_root

SCAN_CELLS = 2048
SIGN_SAMPLES = 512
HYPERBOLIC_TOL = 1e-6
SINGULAR_SLOPE = 1e6
FIXED_MARGIN = 0.005
SINGULAR_MARGIN = 0.01
PRECISION_FLOOR = 1e-8


@dataclass(frozen=True)
class FixedPoint:
    location: float
    multiplier: float
    tangential: bool = False
    singular: bool = False

    @property
    def hyperbolic(self) -> bool:
        return not (self.tangential or abs(self.multiplier - 1.0) < HYPERBOLIC_TOL)

    def __iter__(self):
        yield self.location
        yield self.multiplier


def _multiplier(D, x: float) -> float:
    with np.errstate(all="ignore"):
        try:
            m = float(D.derivative(x))
        except (ValueError, ZeroDivisionError, OverflowError):
            m = math.inf
    return m


def find_fixed_points(D, interval, tol: float = 1e-12, cells: int = SCAN_CELLS) -> list[FixedPoint]:
    """Fixed points of ``D`` on ``interval`` with their multipliers.

    Sign changes of ``D(z) - z`` on a ``cells``-cell grid are refined with
    :func:`find_root`. Grid minima of ``|D(z) - z|`` below ``tol`` without a
    sign change are reported as tangential. A sign change across a pole is
    discarded because the refined point does not satisfy ``D(z) = z``.
    """
    lo, hi = map(float, interval)
    z = np.linspace(lo, hi, cells + 1)
    with np.errstate(all="ignore"):
        F = np.asarray(D(z), dtype=float) - z
    scale = 1.0 + max(abs(lo), abs(hi))
    found: list[float] = []
    tangential: set[float] = set()

    finite = np.isfinite(F)
    exact = np.flatnonzero(finite & (F == 0))
    found.extend(z[exact])
    s = np.sign(F)
    for i in np.flatnonzero(finite[:-1] & finite[1:] & (s[:-1] * s[1:] < 0)):
        f = lambda x: float(D(x)) - x
        r = find_root(f, Bracket(z[i], z[i + 1], F[i], F[i + 1]), tol)
        with np.errstate(all="ignore"):
            # Newton polish: brentq stops at the bracket tolerance
            for _ in range(2):
                slope = _multiplier(D, r) - 1.0
                nxt = r - f(r) / slope if np.isfinite(slope) and slope != 0 else r
                if not (np.isfinite(nxt) and z[i] <= nxt <= z[i + 1]) or abs(f(nxt)) > abs(f(r)):
                    break
                r = nxt
            resid = abs(float(D(r)) - r)
        if np.isfinite(resid) and resid <= 1e-6 * (1.0 + abs(r)):
            found.append(r)
    # a fixed point can sit exactly where D stops being defined (Example 3 at -1/2)
    for i in np.flatnonzero(finite[:-1] != finite[1:]):
        good, bad = (z[i], z[i + 1]) if finite[i] else (z[i + 1], z[i])
        for _ in range(80):
            mid = 0.5 * (good + bad)
            if mid in (good, bad):
                break
            with np.errstate(all="ignore"):
                ok = np.isfinite(float(D(mid)))
            good, bad = (mid, bad) if ok else (good, mid)
        with np.errstate(all="ignore"):
            resid = abs(float(D(good)) - good)
        if resid <= 1e-6 * (1.0 + abs(good)):
            found.append(good)
    aF = np.where(finite, np.abs(F), np.inf)
    interior = np.flatnonzero((aF[1:-1] <= aF[:-2]) & (aF[1:-1] <= aF[2:]) & (aF[1:-1] < tol) & (F[1:-1] != 0)) + 1
    for i in interior:
        if s[i - 1] == s[i + 1]:
            found.append(z[i])
            tangential.add(z[i])

    found.sort()
    merged: list[float] = []
    for x in found:
        if not merged or x - merged[-1] > 1e3 * tol * scale:
            merged.append(x)
    out = []
    for x in merged:
        m = _multiplier(D, x)
        singular = not np.isfinite(m) or abs(m) > SINGULAR_SLOPE
        out.append(FixedPoint(float(x), m, tangential=x in tangential, singular=singular))
    return out


@dataclass(frozen=True)
class Subinterval:
    """A piece of the domain on which ``D(z) - z`` has one sign.

    Attributes:
        lo, hi: Ends of the piece.
        sign: ``"below"`` when ``D(z) < z`` inside, else ``"above"``.
        lo_fixed, hi_fixed: Whether each end is a fixed point of ``D``.
        lo_multiplier, hi_multiplier: ``D'`` at fixed ends (nan otherwise).
        attractor_end: ``"lo"`` or ``"hi"``; the fixed end the splinter
            converges to, or None when neither end is fixed.
        direction: ``"forward"`` (iterate ``D``) or ``"backward"`` (iterate
            ``D^{-1}``).
        multiplier_at_attractor: Contraction rate of the chosen iteration at
            the attractor, ``D'(fp)`` forward or ``1/D'(fp)`` backward.
        lo_singular, hi_singular: Fixed ends where ``D`` is not differentiable.
    """

    lo: float
    hi: float
    sign: str
    lo_fixed: bool
    hi_fixed: bool
    lo_multiplier: float = math.nan
    hi_multiplier: float = math.nan
    attractor_end: str | None = None
    direction: str | None = None
    multiplier_at_attractor: float = math.nan
    lo_singular: bool = False
    hi_singular: bool = False

    @property
    def attractor(self) -> float:
        if self.attractor_end is None:
            raise NoFixedPointInClosure(f"({self.lo}, {self.hi}) has no fixed end")
        return self.lo if self.attractor_end == "lo" else self.hi

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, x) -> np.ndarray:
        return (np.asarray(x) > self.lo) & (np.asarray(x) < self.hi)

    def holds(self, x) -> np.ndarray:
        """Interior points plus any end that is not a fixed point."""
        x = np.asarray(x)
        lo_ok = x >= self.lo if not self.lo_fixed else x > self.lo
        hi_ok = x <= self.hi if not self.hi_fixed else x < self.hi
        return lo_ok & hi_ok

    def toward(self, end: str) -> "Subinterval":
        """Copy re-oriented so its splinters converge to ``end``."""
        if end == self.attractor_end:
            return self
        fixed = self.lo_fixed if end == "lo" else self.hi_fixed
        if not fixed:
            raise NoFixedPointInClosure(f"end {end!r} of ({self.lo}, {self.hi}) is not a fixed point")
        d, mu = _orientation(self.sign, end, self.lo_multiplier if end == "lo" else self.hi_multiplier)
        return Subinterval(self.lo, self.hi, self.sign, self.lo_fixed, self.hi_fixed, self.lo_multiplier,
                           self.hi_multiplier, end, d, mu, self.lo_singular, self.hi_singular)

    def step(self, D, x):
        """One splinter step ``T(x)`` (``D`` or ``D^{-1}``)."""
        if self.direction == "forward":
            return D(x)
        fp = self.attractor
        x = np.asarray(x, dtype=float)
        return D.inverse(x, np.minimum(x, fp), np.maximum(x, fp))

    def step_derivative(self, D, x, Tx):
        """``T'(x)``, given ``Tx = T(x)``."""
        if self.direction == "forward":
            return D.derivative(x)
        return 1.0 / D.derivative(Tx)


def _orientation(sign: str, end: str, mult: float) -> tuple[str, float]:
    # D < z moves points down: forward reaches lo, backward reaches hi
    forward = (sign == "below") == (end == "lo")
    if forward:
        return "forward", mult
    return "backward", 1.0 / mult if mult else math.inf


def subdivide(D, interval=None, strict: bool = False, fixed_points=None) -> list[Subinterval]:
    """Split ``interval`` at the fixed points of ``D``.

    Each piece gets its sign label (checked on 512 interior samples) and an
    attractor: forward iteration where it leads to a fixed end, otherwise
    backward. Pieces with no fixed end get ``attractor_end=None``; with
    ``strict=True`` they raise :class:`NoFixedPointInClosure` instead.
    """
    lo, hi = map(float, D.domain if interval is None else interval)
    if not hi > lo:
        raise PreconditionError("interval must have positive width")
    if fixed_points is None:
        known = getattr(D, "fixed_points", None)
        dom = getattr(D, "domain", None)
        if known and dom is not None and dom[0] <= lo and hi <= dom[1]:
            fixed_points = known
        else:
            fixed_points = find_fixed_points(D, (lo, hi))
    fps = list(fixed_points)
    tol = 1e-9 * (1.0 + max(abs(lo), abs(hi)))
    fps = [f for f in fps if lo - tol <= f.location <= hi + tol]
    ends: list[tuple[float, FixedPoint | None]] = [(lo, None)]
    for f in fps:
        if abs(f.location - lo) <= tol:
            ends[0] = (lo, f)
        elif abs(f.location - hi) <= tol:
            continue
        else:
            ends.append((f.location, f))
    end_fp = next((f for f in fps if abs(f.location - hi) <= tol), None)
    ends.append((hi, end_fp))

    subs = []
    for (a, fa), (b, fb) in zip(ends[:-1], ends[1:]):
        z = np.linspace(a, b, SIGN_SAMPLES + 2)[1:-1]
        with np.errstate(all="ignore"):
            F = np.asarray(D(z), dtype=float) - z
        signs = np.sign(F[np.isfinite(F) & (F != 0)])
        if signs.size == 0:
            raise InconsistentSign(f"D(z) - z vanishes or is undefined throughout ({a}, {b})")
        if np.any(signs != signs[0]):
            bad = z[np.flatnonzero(np.sign(F) != signs[0])[0]]
            raise InconsistentSign(f"D(z) - z changes sign inside ({a}, {b}) near {bad}; the fit of D wiggles")
        sign = "below" if signs[0] < 0 else "above"
        ma = fa.multiplier if fa else math.nan
        mb = fb.multiplier if fb else math.nan
        # prefer the end reachable by forward iteration
        end = None
        for cand in (("lo", "hi") if sign == "below" else ("hi", "lo")):
            f = fa if cand == "lo" else fb
            if f is not None:
                end = cand
                break
        if end is None:
            if strict:
                raise NoFixedPointInClosure(f"neither end of ({a}, {b}) is a fixed point")
            d, mu = None, math.nan
        else:
            d, mu = _orientation(sign, end, ma if end == "lo" else mb)
        subs.append(Subinterval(a, b, sign, fa is not None, fb is not None, ma, mb, end, d, mu,
                                bool(fa and fa.singular), bool(fb and fb.singular)))
    return subs


def solver_grid(sub: Subinterval, n: int = 401) -> np.ndarray:
    """Uniform grid on ``sub`` that keeps clear of fixed ends.

    The margin is 0.5% of the width at regular fixed points and 1% at
    singular ones; non-fixed ends (data-hull edges) are included.
    """
    w = sub.width
    m_lo = (SINGULAR_MARGIN if sub.lo_singular else FIXED_MARGIN) * w if sub.lo_fixed else 0.0
    m_hi = (SINGULAR_MARGIN if sub.hi_singular else FIXED_MARGIN) * w if sub.hi_fixed else 0.0
    return np.linspace(sub.lo + m_lo, sub.hi - m_hi, n)


@dataclass(frozen=True)
class Splinter:
    points: np.ndarray
    direction: str
    limit: float
    converged: bool = True


def splinter(D, sub: Subinterval, x0: float, tol: float = 1e-12, n_max: int = 10_000) -> Splinter:
    """Orbit of ``x0`` under ``D`` or ``D^{-1}`` toward the attractor of ``sub``.

    Raises:
        PreconditionError: ``x0`` is not inside ``sub``.
        MaxIterExceeded: ``n_max`` steps without reaching ``tol``; the
            partial splinter is attached as ``partial``.
        NonMonotoneSequence: the orbit turned back, so ``D`` is inconsistent
            with the sign label.
    """
    if not sub.holds(x0):
        raise PreconditionError(f"x0={x0} is not inside ({sub.lo}, {sub.hi})")
    fp = sub.attractor
    pts = [float(x0)]
    gap = abs(x0 - fp)
    x = float(x0)
    for _ in range(n_max):
        if gap <= tol:
            return Splinter(np.array(pts), sub.direction, fp, True)
        x = float(sub.step(D, x))
        new_gap = abs(x - fp)
        if not new_gap < gap and new_gap > tol:
            raise NonMonotoneSequence(f"orbit stopped approaching {fp} at step {len(pts)} (x={x})")
        pts.append(x)
        gap = new_gap
    if gap <= tol:
        return Splinter(np.array(pts), sub.direction, fp, True)
    raise MaxIterExceeded(f"splinter did not reach {fp} within {n_max} steps",
                          partial=Splinter(np.array(pts), sub.direction, fp, False))


class SplinterMap:
    """The step ``T`` toward an attractor, its slope and contraction ``mu``.

    With ``sub=None`` this is plain forward iteration of ``D`` toward its
    base fixed point, with no containment requirement.
    """

    def __init__(self, D, sub: "Subinterval | None"):
        self.D = D
        self.sub = sub
        if sub is None:
            self.fp, self.mu = D.base_fixed_point, D.lam
        else:
            self.fp, self.mu = sub.attractor, sub.multiplier_at_attractor
        if not 0 < self.mu < 1:
            raise PreconditionError(f"attractor multiplier {self.mu} is not in (0, 1)")

    def step(self, x):
        if self.sub is None:
            return self.D(x)
        return self.sub.step(self.D, x)

    def slope(self, x, Tx):
        if self.sub is None:
            return self.D.derivative(x)
        return self.sub.step_derivative(self.D, x, Tx)

    def floor(self) -> float:
        # D(x) - fp is rounding noise once x_n is this close to fp: either
        # fp itself is large, or D is only accurate to u * eval_scale
        info = getattr(self.D, "info", None) or {}
        return PRECISION_FLOOR * max(abs(self.fp), float(info.get("eval_scale", 0.0)))
