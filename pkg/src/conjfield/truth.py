"""Closed-form test problems.

Each example is a one-parameter family of scalar fields ``v`` whose unit-time
map ``D``, its derivatives, the normalised Julia solution ``g`` (with
``v = log(a) g``), a Schroeder conjugation ``h`` and the flow are all known
explicitly. They double as CLI data generators and test oracles.

* ``quadratic``: ``v = log(a) x (1 - x)``, ``D = a x / (1 - (1 - a) x)``.
* ``cubic``: ``v = log(a) x (1 - x^2)``, ``D = a x / sqrt(1 + (a^2 - 1) x^2)``.
* ``singular``: ``v = log(a) (x + 1/2) log(2x + 1)``,
  ``D = ((2x + 1)^a - 1) / 2``; not differentiable at ``x = -1/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidParameter, PreconditionError
from .numeric import ScalarMap


@dataclass(frozen=True)
class Example:
    name: str
    a: float
    D: Callable
    dD: Callable
    d2D: Callable
    g: Callable
    h: Callable
    flow: Callable  # flow(x0, t)
    domain: tuple[float, float]

    def v(self, x):
        return math.log(self.a) * self.g(x)

    def scalar_map(self) -> ScalarMap:
        return ScalarMap(self.D, self.dD, self.domain)

    def trajectory(self, x0: float, n: int, dt: float = 1.0):
        """``n`` samples of the exact trajectory from ``x0`` at spacing ``dt``."""
        t = dt * np.arange(n)
        return t, self.flow(x0, t)


def _check_a(a: float) -> None:
    if not 0 < a < 1:
        raise InvalidParameter(f"a must lie in (0, 1), got {a}")


def quadratic(a: float = 0.5) -> Example:
    _check_a(a)
    b = 1.0 - a

    def flow(x0, t):
        at = a ** np.asarray(t, dtype=float)
        return at * x0 / (1.0 - (1.0 - at) * x0)

    return Example(
        "quadratic", a,
        D=lambda x: a * x / (1.0 - b * x),
        dD=lambda x: a / (1.0 - b * x) ** 2,
        d2D=lambda x: 2.0 * a * b / (1.0 - b * x) ** 3,
        g=lambda x: x * (1.0 - x),
        h=lambda x: x / (1.0 - x),
        flow=flow,
        domain=(-math.inf, math.inf),
    )


def cubic(a: float = 0.9) -> Example:
    _check_a(a)
    c = a * a - 1.0
    xs = 1.0 / math.sqrt(1.0 - a * a)

    def flow(x0, t):
        at = a ** np.asarray(t, dtype=float)
        return at * x0 / np.sqrt(1.0 + (at * at - 1.0) * x0 * x0)

    def h(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            return x / np.sqrt(np.abs(1.0 - x * x))

    return Example(
        "cubic", a,
        D=lambda x: a * x / np.sqrt(1.0 + c * x * x),
        dD=lambda x: a / (1.0 + c * x * x) ** 1.5,
        d2D=lambda x: -3.0 * a * c * x / (1.0 + c * x * x) ** 2.5,
        g=lambda x: x * (1.0 - x * x),
        h=h,
        flow=flow,
        domain=(-xs, xs),
    )


def singular(a: float = 0.5) -> Example:
    _check_a(a)

    # expm1/log1p keep D(x) accurate relative to x near the fixed point 0
    def flow(x0, t):
        at = a ** np.asarray(t, dtype=float)
        return np.expm1(at * np.log1p(2.0 * np.asarray(x0, dtype=float))) / 2.0

    return Example(
        "singular", a,
        D=lambda x: np.expm1(a * np.log1p(2.0 * np.asarray(x, dtype=float))) / 2.0,
        dD=lambda x: a * np.exp((a - 1.0) * np.log1p(2.0 * np.asarray(x, dtype=float))),
        d2D=lambda x: 2.0 * a * (a - 1.0) * (2.0 * x + 1.0) ** (a - 2.0),
        g=lambda x: (x + 0.5) * np.log1p(2.0 * np.asarray(x, dtype=float)),
        h=lambda x: np.log1p(2.0 * np.asarray(x, dtype=float)) / 2.0,
        flow=flow,
        domain=(-0.5, math.inf),
    )


EXAMPLES = {"quadratic": quadratic, "cubic": cubic, "singular": singular}


def get_example(name: str, a: float | None = None) -> Example:
    try:
        factory = EXAMPLES[name]
    except KeyError:
        raise PreconditionError(f"unknown example {name!r}; choose from {sorted(EXAMPLES)}") from None
    return factory() if a is None else factory(a)
