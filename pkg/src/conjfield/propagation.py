"""The unit-time propagation map ``D`` and its multiplier."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NotAFixedPoint, PreconditionError
from .numeric import ScalarMap, invert_monotone_array, numeric_derivative


def fp_tolerance(fp: float) -> float:
    return 1e-8 * (1.0 + abs(fp))


@dataclass(frozen=True)
class PropagationMap:
    """An evaluable ``D`` with derivative, fixed points and base multiplier.

    Attributes:
        map: ``D`` and ``D'``.
        domain: Interval on which the map is trusted (the data hull, widened
            to contain the base fixed point). Evaluation outside it is
            allowed; callers flag it.
        fixed_points: ``FixedPoint`` records inside the domain.
        base_fixed_point: The fixed point used for normalisation.
        lam: ``D'(base_fixed_point)``.
        delta_t: Sampling interval the map was built for.
        residual_norm: RMS fit residual on the pairs (0 for exact maps).
        flags: Free-form markers such as ``"non-contractive"``.
    """

    map: ScalarMap
    domain: tuple[float, float]
    fixed_points: tuple = ()
    base_fixed_point: float = 0.0
    lam: float = math.nan
    delta_t: float = 1.0
    residual_norm: float = 0.0
    flags: tuple[str, ...] = ()
    info: dict = field(default_factory=dict, compare=False)

    def __call__(self, x):
        return self.map(x)

    def derivative(self, x):
        return self.map.derivative(x)

    def inverse(self, y, lo, hi):
        """``D^{-1}(y)`` searched in ``[lo, hi]`` (elementwise brackets allowed)."""
        y = np.asarray(y, dtype=float)
        return invert_monotone_array(self.map, self.map.derivative, y, lo, hi)

    def with_flags(self, *flags: str) -> "PropagationMap":
        return replace(self, flags=tuple(dict.fromkeys(self.flags + flags)))


def estimate_multiplier(D: PropagationMap, fp: float) -> float:
    """``D'(fp)``, checking first that ``fp`` is fixed."""
    if abs(float(D(fp)) - fp) > fp_tolerance(fp):
        raise NotAFixedPoint(f"D({fp}) = {float(D(fp))} is not {fp}")
    if D.map.deriv is not None:
        return float(D.derivative(fp))
    return numeric_derivative(D.map, fp)


def build_map(
    scalar_map: ScalarMap,
    hull: tuple[float, float],
    delta_t: float = 1.0,
    base_hint: float | None = None,
    residual_norm: float = 0.0,
    flags: tuple[str, ...] = (),
    info: dict | None = None,
) -> PropagationMap:
    """Wrap a fitted or exact map: locate fixed points and pick the base one.

    Fixed points are searched on ``hull`` widened by 1% of its width per side.
    The base fixed point is the attractive one (``0 < D' < 1``) closest to
    ``base_hint`` (or to the hull centre). When none is attractive the nearest
    fixed point is used and the map is flagged ``"non-contractive"``.
    """
    from .domain import find_fixed_points

    lo, hi = map(float, hull)
    if not hi > lo:
        raise PreconditionError("hull must have positive width")
    pad = 0.01 * (hi - lo)
    scan = (max(lo - pad, scalar_map.domain[0]), min(hi + pad, scalar_map.domain[1]))
    fps = find_fixed_points(scalar_map, scan)
    flags = tuple(flags)
    if not fps:
        return PropagationMap(scalar_map, (lo, hi), (), math.nan, math.nan, delta_t,
                              residual_norm, flags + ("no-fixed-point",), dict(info or {}))
    target = 0.5 * (lo + hi) if base_hint is None else base_hint
    attractive = [f for f in fps if 0 < f.multiplier < 1 and f.hyperbolic and not f.singular]
    pool = attractive or [f for f in fps if not f.singular] or fps
    base = min(pool, key=lambda f: abs(f.location - target))
    if not attractive:
        flags += ("non-contractive",)
    if any(not f.hyperbolic for f in fps):
        flags += ("non-hyperbolic",)
    dom = (min(lo, base.location), max(hi, base.location))
    return PropagationMap(scalar_map, dom, tuple(fps), base.location, base.multiplier, delta_t,
                          residual_norm, flags, dict(info or {}))


def exact_map(func, deriv, hull, delta_t: float = 1.0, base_hint: float | None = None,
              domain=(-math.inf, math.inf)) -> PropagationMap:
    """Convenience wrapper for maps known in closed form."""
    return build_map(ScalarMap(func, deriv, domain), hull, delta_t, base_hint)
