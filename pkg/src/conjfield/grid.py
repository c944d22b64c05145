"""Tabulated functions with an attached interpolation rule."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .barycentric import floater_hormann
from .errors import ExtrapolationWarning, InterpolationOutOfHull, PreconditionError

RULES = ("monotone-cubic", "barycentric-rational", "linear")
FH_ORDER = 8


@dataclass(frozen=True)
class GridFunction:
    """Values on a strictly increasing grid plus an interpolation rule.

    Rules: ``"monotone-cubic"`` (PCHIP), ``"barycentric-rational"``
    (Floater-Hormann, order 8) and ``"linear"``. Evaluating outside the grid
    hull raises :class:`InterpolationOutOfHull` unless ``extrapolate=True``,
    in which case an :class:`ExtrapolationWarning` is issued.

    With ``origin`` set, the rule interpolates ``values / (x - origin)``
    (taking ``origin_slope`` at the origin) and multiplies back. This suits
    functions that vanish at a fixed point, where the quotient is smooth.
    """

    grid: np.ndarray
    values: np.ndarray
    rule: str = "monotone-cubic"
    origin: float | None = None
    origin_slope: float = 1.0
    _interp: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.ndim != 1 or g.shape != v.shape or g.size < 2:
            raise PreconditionError("grid and values must be 1-D of equal length >= 2")
        if np.any(np.diff(g) <= 0):
            raise PreconditionError("grid must be strictly increasing")
        if self.rule not in RULES:
            raise PreconditionError(f"unknown rule {self.rule!r}; choose from {RULES}")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)
        q = self._quotient_values()
        if self.rule == "monotone-cubic":
            interp = PchipInterpolator(g, q, extrapolate=True)
        elif self.rule == "barycentric-rational":
            interp = floater_hormann(g, q, min(FH_ORDER, g.size - 1))
        else:
            interp = None
        object.__setattr__(self, "_interp", interp)

    def _quotient_values(self) -> np.ndarray:
        if self.origin is None:
            return self.values
        d = self.grid - self.origin
        q = np.full_like(self.values, self.origin_slope)
        nz = d != 0
        q[nz] = self.values[nz] / d[nz]
        return q

    def _raw(self, x) -> np.ndarray:
        if self.rule == "linear":
            return np.interp(x, self.grid, self._quotient_values())
        return np.asarray(self._interp(x), dtype=float)

    @property
    def hull(self) -> tuple[float, float]:
        return float(self.grid[0]), float(self.grid[-1])

    def _check(self, x, extrapolate: bool):
        lo, hi = self.hull
        slack = 1e-12 * max(1.0, abs(lo), abs(hi))
        out = (x < lo - slack) | (x > hi + slack)
        if np.any(out):
            if not extrapolate:
                raise InterpolationOutOfHull(
                    f"{np.count_nonzero(out)} point(s) outside [{lo}, {hi}], e.g. {x[out][0]}"
                )
            warnings.warn(f"extrapolating outside [{lo}, {hi}]", ExtrapolationWarning, stacklevel=3)

    def __call__(self, x, extrapolate: bool = False):
        scalar = np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        self._check(x, extrapolate)
        y = self._raw(x)
        if self.rule == "linear" and extrapolate:
            g, v = self.grid, self._quotient_values()
            left, right = x < g[0], x > g[-1]
            y[left] = v[0] + (x[left] - g[0]) * (v[1] - v[0]) / (g[1] - g[0])
            y[right] = v[-1] + (x[right] - g[-1]) * (v[-1] - v[-2]) / (g[-1] - g[-2])
        if self.origin is not None:
            y = (x - self.origin) * y
        return float(y[0]) if scalar else y

    def derivative(self, x, extrapolate: bool = False):
        scalar = np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        self._check(x, extrapolate)
        if self.rule == "monotone-cubic":
            d = self._interp.derivative()(x)
        elif self.rule == "barycentric-rational":
            d = self._interp.derivative(x)
        else:
            q = self._quotient_values()
            slopes = np.diff(q) / np.diff(self.grid)
            idx = np.clip(np.searchsorted(self.grid, x, side="right") - 1, 0, slopes.size - 1)
            d = slopes[idx]
        d = np.asarray(d, dtype=float)
        if self.origin is not None:
            d = self._raw(x) + (x - self.origin) * d
        return float(d[0]) if scalar else d

    def scaled(self, c: float) -> "GridFunction":
        return GridFunction(self.grid, c * self.values, self.rule, self.origin, c * self.origin_slope)

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.grid, values, self.rule, self.origin, self.origin_slope)
