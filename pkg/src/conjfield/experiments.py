"""Noise sweeps: perturb pairs from a known field, refit, recover, score."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .data import PairSet
from .diagnostics import DiagnosticsReport, relative_errors, stability_constant
from .errors import PreconditionError, ZeroDenominator
from .fitting import MODELS, fit_monotone_spline, fit_parametric, fit_rational_barycentric
from .julia import recover_field
from .truth import get_example

NOISE_KINDS = ("additive-interval", "relative")
FITTERS = ("parametric", "rational", "spline")
SOLVERS = ("product", "fixed-point", "least-squares")


@dataclass
class ExperimentConfig:
    """Settings for :func:`noise_experiment`.

    Attributes:
        example: Ground-truth family name (``quadratic``, ``cubic``, ``singular``).
        a: Family parameter; the family default when None.
        sigmas: Noise levels, one report row each.
        n_pairs: Pairs per replicate.
        replicates: Independent noise draws per level; rows hold medians.
        seed: Base seed. Replicate ``k`` of row ``i`` draws from the stream
            seeded by ``(seed, i, k)``.
        x_range: Abscissas are ``n_pairs`` equispaced points on this interval.
        noise: ``additive-interval`` adds U(-sigma/2, sigma/2); ``relative``
            multiplies by 1 + U(-sigma, sigma).
        fitter, solver: Pipeline choices.
        n_support: Support size for the least-squares rational fitter.
        eval_range, eval_points: Uniform grid on which errors are measured.
    """

    example: str = "quadratic"
    a: float | None = None
    sigmas: list[float] = field(default_factory=lambda: [0.1, 0.5, 0.9, 1.9, 2.9, 3.9, 4.5])
    n_pairs: int = 100
    replicates: int = 10
    seed: int = 0
    x_range: tuple[float, float] = (0.0, 1.5)
    noise: str = "additive-interval"
    fitter: str = "parametric"
    solver: str = "product"
    n_support: int | str = "auto"
    eval_range: tuple[float, float] = (0.0, 3.0)
    eval_points: int = 401

    def __post_init__(self):
        self.sigmas = [float(s) for s in self.sigmas]
        self.x_range = tuple(float(v) for v in self.x_range)
        self.eval_range = tuple(float(v) for v in self.eval_range)
        if self.noise not in NOISE_KINDS:
            raise PreconditionError(f"noise must be one of {NOISE_KINDS}")
        if self.fitter not in FITTERS:
            raise PreconditionError(f"fitter must be one of {FITTERS}")
        if self.solver not in SOLVERS:
            raise PreconditionError(f"solver must be one of {SOLVERS}")
        if self.n_pairs < 3 or self.replicates < 1 or self.eval_points < 2:
            raise PreconditionError("need n_pairs >= 3, replicates >= 1 and eval_points >= 2")
        if any(s < 0 for s in self.sigmas):
            raise PreconditionError("noise levels must be non-negative")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise PreconditionError(f"unknown experiment keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)


def perturb(y, sigma: float, kind: str, rng: np.random.Generator) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if kind == "additive-interval":
        return y + rng.uniform(-sigma / 2.0, sigma / 2.0, y.size)
    if kind == "relative":
        return y * (1.0 + rng.uniform(-sigma, sigma, y.size))
    raise PreconditionError(f"noise must be one of {NOISE_KINDS}")


def _initial_parameter(model, x, y) -> list[float]:
    # coarse scan over the admissible range of the one-parameter families
    candidates = np.linspace(0.01, 0.99, 99)
    with np.errstate(all="ignore"):
        costs = [float(np.sum((model.eval([c], x) - y) ** 2)) for c in candidates]
    costs = np.where(np.isfinite(costs), costs, np.inf)
    return [float(candidates[int(np.argmin(costs))])]


def fit_pairs(pairs: PairSet, config: ExperimentConfig):
    if config.fitter == "parametric":
        model = MODELS[config.example]()
        return fit_parametric(pairs, model, _initial_parameter(model, pairs.x, pairs.y))
    if config.fitter == "rational":
        return fit_rational_barycentric(pairs, mode="lsq", n_support=config.n_support)
    return fit_monotone_spline(pairs)


def run_replicate(config: ExperimentConfig, sigma: float, rng: np.random.Generator) -> DiagnosticsReport:
    """One noisy draw: fit, recover and score on the evaluation grid."""
    truth = get_example(config.example, config.a)
    x = np.linspace(*config.x_range, config.n_pairs)
    y = perturb(truth.D(x), sigma, config.noise, rng)
    D = fit_pairs(PairSet(x, y), config)
    grid = np.linspace(*config.eval_range, config.eval_points)
    est = recover_field(D, config.solver, grid=grid)
    report = est.diagnostics
    report.sigma = sigma
    report.eps_D = relative_errors(truth.D, D, grid)
    report.eps_Dprime = relative_errors(truth.dD, D.derivative, grid)
    report.eps_v = relative_errors(truth.v, est, grid)
    try:
        report.C_v = stability_constant(report.eps_v, report.eps_D, report.eps_Dprime)
    except ZeroDenominator:
        report.C_v = math.nan
        report.flag("C_v-undefined")
    return report


def _median(values) -> float:
    vals = np.asarray(values, dtype=float)
    vals = vals[~np.isnan(vals)]
    return float(np.median(vals)) if vals.size else math.nan


def noise_experiment(config: ExperimentConfig) -> list[DiagnosticsReport]:
    """One report row per noise level holding medians over the replicates.

    Flags of every replicate are merged into the row. Replicates that fail
    with a package error are skipped and counted in a ``failed=k`` flag.
    """
    from .errors import ConjFieldError

    rows = []
    for i, sigma in enumerate(config.sigmas):
        reps, failures = [], 0
        for k in range(config.replicates):
            rng = np.random.default_rng([config.seed, i, k])
            try:
                reps.append(run_replicate(config, sigma, rng))
            except ConjFieldError:
                failures += 1
        row = DiagnosticsReport(sigma=sigma)
        if reps:
            for name in ("eps_D", "eps_Dprime", "eps_v", "C_v", "julia_residual"):
                setattr(row, name, _median([getattr(r, name) for r in reps]))
            for r in reps:
                row.flag(*r.flags)
        if failures:
            row.flag(f"failed={failures}")
        rows.append(row)
    return rows
