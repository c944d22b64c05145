"""Sampled trajectories and the (x, D(x)) pairs derived from them.

Trajectory CSV: UTF-8, optional header, columns ``series_id,t,x`` (or just
``t,x`` for a single series, which gets the id ``"default"``). Lines starting
with ``#`` are comments.

Pair CSV: columns ``x,y`` with an optional ``# delta_t=<value>`` comment.
"""

from __future__ import annotations

import csv
import io
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

from .errors import (
    EmptySeries,
    InsufficientSpan,
    MixedDeltaT,
    NonMonotoneTime,
    NonUniformGrid,
    ParseError,
    PreconditionError,
)

DEFAULT_ID = "default"


@dataclass(frozen=True)
class Series:
    id: str
    t: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        x = np.asarray(self.x, dtype=float)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "x", x)
        if t.size < 2:
            raise EmptySeries(f"series {self.id!r} has {t.size} sample(s); need at least 2")
        if t.shape != x.shape:
            raise PreconditionError("t and x must have the same length")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(x))):
            raise ParseError(f"series {self.id!r} contains non-finite values")
        if np.any(np.diff(t) <= 0):
            raise NonMonotoneTime(f"times in series {self.id!r} are not strictly increasing")


@dataclass(frozen=True)
class TimeSeriesSet:
    series: tuple[Series, ...]

    def __post_init__(self):
        object.__setattr__(self, "series", tuple(self.series))
        if not self.series:
            raise EmptySeries("no series")

    def __len__(self) -> int:
        return len(self.series)

    @classmethod
    def single(cls, t, x, id: str = DEFAULT_ID) -> "TimeSeriesSet":
        return cls((Series(id, t, x),))


@dataclass(frozen=True)
class PairSet:
    """Samples ``(x_i, y_i)`` of the propagation map, ``y_i ~ D(x_i)``.

    Construction sorts by ``x`` and averages ``y`` over abscissas closer than
    ``1e-12`` times the abscissa span.
    """

    x: np.ndarray
    y: np.ndarray
    delta_t: float = 1.0
    _merge_tol: float = field(default=1e-12, repr=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        if x.shape != y.shape:
            raise PreconditionError("x and y must have equal length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ParseError("pairs must be finite")
        if not self.delta_t > 0:
            raise PreconditionError("delta_t must be positive")
        order = np.argsort(x, kind="stable")
        x, y = x[order], y[order]
        if x.size > 1:
            tol = self._merge_tol * (x[-1] - x[0])
            starts = np.concatenate([[True], np.diff(x) > tol])
            groups = np.cumsum(starts) - 1
            counts = np.bincount(groups)
            x = np.bincount(groups, weights=x) / counts
            y = np.bincount(groups, weights=y) / counts
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __len__(self) -> int:
        return self.x.size

    @property
    def hull(self) -> tuple[float, float]:
        return float(self.x[0]), float(self.x[-1])


def _rows(text: str):
    for lineno, line in enumerate(io.StringIO(text), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        yield lineno, next(csv.reader([s]))


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def parse_series(text: str) -> TimeSeriesSet:
    groups: "OrderedDict[str, list[tuple[float, float]]]" = OrderedDict()
    first = True
    for lineno, row in _rows(text):
        row = [c.strip() for c in row]
        if first:
            first = False
            if not all(_is_number(c) for c in row[-2:]):
                continue  # header
        if len(row) == 3:
            sid, ts, xs = row
        elif len(row) == 2:
            sid, (ts, xs) = DEFAULT_ID, row
        else:
            raise ParseError(f"line {lineno}: expected 2 or 3 columns, got {len(row)}")
        try:
            t, x = float(ts), float(xs)
        except ValueError:
            raise ParseError(f"line {lineno}: non-numeric value in {row!r}") from None
        groups.setdefault(sid or DEFAULT_ID, []).append((t, x))
    if not groups:
        raise EmptySeries("no samples found")
    series = []
    for sid, samples in groups.items():
        arr = np.array(samples, dtype=float)
        series.append(Series(sid, arr[:, 0], arr[:, 1]))
    return TimeSeriesSet(tuple(series))


def load_series(path) -> TimeSeriesSet:
    """Read a trajectory CSV (see module docstring for the format)."""
    return parse_series(Path(path).read_text(encoding="utf-8"))


def write_series(ts: TimeSeriesSet, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("series_id,t,x\n")
        for s in ts.series:
            for t, x in zip(s.t, s.x):
                fh.write(f"{s.id},{float(t)!r},{float(x)!r}\n")


def load_pairs(path) -> PairSet:
    text = Path(path).read_text(encoding="utf-8")
    delta_t = 1.0
    for line in text.splitlines():
        s = line.strip()
        if s.startswith("#") and "delta_t" in s:
            try:
                delta_t = float(s.split("=", 1)[1])
            except (IndexError, ValueError):
                raise ParseError(f"bad delta_t comment: {s!r}") from None
    xs, ys = [], []
    first = True
    for lineno, row in _rows(text):
        if first:
            first = False
            if not all(_is_number(c) for c in row):
                continue
        if len(row) != 2:
            raise ParseError(f"line {lineno}: expected 2 columns (x,y)")
        try:
            xs.append(float(row[0]))
            ys.append(float(row[1]))
        except ValueError:
            raise ParseError(f"line {lineno}: non-numeric value in {row!r}") from None
    if not xs:
        raise EmptySeries(f"no pairs in {path}")
    return PairSet(np.array(xs), np.array(ys), delta_t)


def write_pairs(pairs: PairSet, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# delta_t={float(pairs.delta_t)!r}\nx,y\n")
        for x, y in zip(pairs.x, pairs.y):
            fh.write(f"{float(x)!r},{float(y)!r}\n")


def build_pairs_uniform(ts: TimeSeriesSet, delta_t: float) -> PairSet:
    """Pairs ``(x_i, x_{i+1})`` from series sampled every ``delta_t``."""
    xs, ys = [], []
    for s in ts.series:
        dt = np.diff(s.t)
        if not np.allclose(dt, delta_t, rtol=1e-9, atol=0.0):
            raise NonUniformGrid(
                f"series {s.id!r} is not sampled every {delta_t}; use build_pairs_resampled"
            )
        xs.append(s.x[:-1])
        ys.append(s.x[1:])
    return PairSet(np.concatenate(xs), np.concatenate(ys), delta_t)


def _time_interpolant(t, x, rule: str):
    if rule == "linear":
        return lambda tq: np.interp(tq, t, x)
    if rule in ("monotone-cubic", "pchip"):
        return PchipInterpolator(t, x)
    if rule == "cubic":
        return CubicSpline(t, x, bc_type="not-a-knot" if t.size > 3 else "natural")
    raise PreconditionError(f"unknown time interpolation rule {rule!r}")


def build_pairs_resampled(ts: TimeSeriesSet, delta_t: float, time_interp: str = "monotone-cubic") -> PairSet:
    """Pairs ``(x_i, x_ap(t_i + delta_t))`` from irregularly sampled series.

    ``x_ap`` interpolates each series in time (``"monotone-cubic"``,
    ``"cubic"`` or ``"linear"``). Samples whose shifted time falls past the
    end of their series are dropped.
    """
    if not delta_t > 0:
        raise PreconditionError("delta_t must be positive")
    xs, ys = [], []
    for s in ts.series:
        keep = s.t + delta_t <= s.t[-1] * (1 + 1e-12) + 1e-12
        if not keep.any():
            continue
        interp = _time_interpolant(s.t, s.x, time_interp)
        tq = np.minimum(s.t[keep] + delta_t, s.t[-1])
        xs.append(s.x[keep])
        ys.append(np.asarray(interp(tq), dtype=float))
    if not xs:
        raise InsufficientSpan(f"no series spans delta_t={delta_t}")
    return PairSet(np.concatenate(xs), np.concatenate(ys), delta_t)


def merge_pair_sets(sets) -> PairSet:
    sets = list(sets)
    if not sets:
        raise PreconditionError("nothing to merge")
    dt = sets[0].delta_t
    for p in sets[1:]:
        if not math.isclose(p.delta_t, dt, rel_tol=1e-9, abs_tol=0.0):
            raise MixedDeltaT(f"delta_t values differ: {dt} vs {p.delta_t}")
    return PairSet(np.concatenate([p.x for p in sets]), np.concatenate([p.y for p in sets]), dt)
