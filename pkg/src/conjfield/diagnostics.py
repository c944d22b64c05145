"""Quality measures for a recovered field and the condition checks on ``D``.

The stability constant ``C_v = eps_v / (eps_D + eps_D')`` compares the
relative sup-norm error of the field with those of ``D`` and ``D'``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ZeroDenominator, ZeroReference
from .numeric import second_derivative

REPORT_COLUMNS = ("sigma", "eps_D", "eps_Dprime", "eps_v", "C_v", "flags")


@dataclass
class DiagnosticsReport:
    eps_D: float = math.nan
    eps_Dprime: float = math.nan
    eps_v: float = math.nan
    C_v: float = math.nan
    julia_residual: float = math.nan
    schroeder_residual: float | None = None
    flags: list[str] = field(default_factory=list)
    sigma: float | None = None

    def flag(self, *names: str) -> None:
        for n in names:
            if n not in self.flags:
                self.flags.append(n)

    def to_dict(self) -> dict:
        return asdict(self)


def relative_errors(reference, approx, grid) -> float:
    """``sup |approx - reference| / sup |reference|`` over ``grid``."""
    grid = np.asarray(grid, dtype=float)
    ref = np.asarray(reference(grid), dtype=float)
    app = np.asarray(approx(grid), dtype=float)
    denom = float(np.max(np.abs(ref)))
    if denom == 0:
        raise ZeroReference("reference vanishes on the grid")
    return float(np.max(np.abs(app - ref))) / denom


def stability_constant(eps_v: float, eps_D: float, eps_Dprime: float) -> float:
    denom = eps_D + eps_Dprime
    if not denom > 0:
        raise ZeroDenominator("eps_D + eps_Dprime must be positive")
    return eps_v / denom


def _fixed_point_of(D, sub) -> float:
    return D.base_fixed_point if sub is None else sub.attractor


def _second(D, x):
    return np.array([second_derivative(D.map, float(xi)) for xi in np.atleast_1d(x)])


def check_monotonicity_condition(D, sub, grid) -> tuple[bool, float | None]:
    """Whether ``rho(x) = (D(x) - fp) / ((x - fp) D'(x))`` increases on ``grid``.

    The sign of ``rho'`` is the sign of
    ``D'^2 (x - fp) - (D - fp)(D' + (x - fp) D'')``; values within rounding of
    zero count as violations. Returns ``(ok, first_violating_x)``.
    """
    fp = _fixed_point_of(D, sub)
    x = np.asarray(grid, dtype=float)
    x = x[x != fp]
    d = x - fp
    Dx = np.asarray(D(x), dtype=float) - fp
    d1 = np.asarray(D.derivative(x), dtype=float)
    d2 = _second(D, x)
    num = d1 * d1 * d - Dx * (d1 + d * d2)
    scale = np.abs(d1 * d1 * d) + np.abs(Dx * d1) + np.abs(Dx * d * d2)
    ok = num > 1e-9 * scale
    if np.all(ok):
        return True, None
    return False, float(x[np.flatnonzero(~ok)[0]])


def check_superlinearity(D, g, grid=None, fp: float | None = None) -> bool | None:
    """``g(x) >= x - fp`` on the grid when ``D''(fp) < 0``; None otherwise.

    ``g`` is a grid function (its own grid is used unless ``grid`` is given)
    or any callable together with ``grid``.
    """
    fp = D.base_fixed_point if fp is None else fp
    d2 = second_derivative(D.map, fp)
    if not d2 < -1e-7:
        return None
    x = np.asarray(g.grid if grid is None else grid, dtype=float)
    return bool(np.all(np.asarray(g(x), dtype=float) >= (x - fp) - 1e-8))


def julia_residual(D, g, grid, sub=None) -> float:
    """``max |g(T x) - T'(x) g(x)|`` with ``T`` the splinter step of ``sub``.

    ``T`` is ``D`` when ``sub`` is None. ``g`` may be any callable; points
    whose image leaves a grid function's hull are skipped.
    """
    from .domain import SplinterMap

    x = np.asarray(grid, dtype=float)
    if sub is None:
        Tx, dT = np.asarray(D(x), dtype=float), np.asarray(D.derivative(x), dtype=float)
    else:
        step = SplinterMap(D, sub)
        Tx = step.step(x)
        dT = step.slope(x, Tx)
    hull = getattr(g, "hull", None)
    if hull is not None:
        keep = (Tx >= hull[0]) & (Tx <= hull[1])
        x, Tx, dT = x[keep], Tx[keep], dT[keep]
    with np.errstate(all="ignore"):
        r = np.abs(np.asarray(g(Tx)) - dT * np.asarray(g(x)))
    # orbits thrown across a pole give inf - inf; those points carry no information
    r = r[np.isfinite(r)]
    return float(np.max(r)) if r.size else math.nan


def _fmt(v) -> str:
    if v is None:
        return ""
    return repr(float(v))


def write_report_csv(rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in rows:
            w.writerow([_fmt(r.sigma), _fmt(r.eps_D), _fmt(r.eps_Dprime), _fmt(r.eps_v), _fmt(r.C_v),
                        ";".join(r.flags)])


def read_report_csv(path) -> list[DiagnosticsReport]:
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            num = lambda k: float(row[k]) if row[k] != "" else None
            out.append(DiagnosticsReport(
                eps_D=num("eps_D"), eps_Dprime=num("eps_Dprime"), eps_v=num("eps_v"), C_v=num("C_v"),
                flags=[f for f in row["flags"].split(";") if f], sigma=num("sigma"),
            ))
    return out


def write_report_json(rows, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([r.to_dict() for r in rows], fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_report_json(path) -> list[DiagnosticsReport]:
    with open(path, encoding="utf-8") as fh:
        return [DiagnosticsReport(**d) for d in json.load(fh)]
