"""Estimating ``D`` from pairs: parametric, barycentric rational, monotone spline."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator

from .barycentric import BarycentricRational, aaa_fit, lsq_fit, remove_doublets
from .data import PairSet
from .errors import (
    NoConvergence,
    NonMonotoneData,
    PreconditionError,
    SingularJacobian,
    SpuriousPole,
)
from .numeric import ScalarMap
from .propagation import PropagationMap, build_map


@dataclass(frozen=True)
class ParametricModel:
    """A family ``x -> f(p, x)`` with its ``x``-derivative.

    Attributes:
        arity: Number of parameters.
        eval: ``(params, x) -> f``; vectorised in ``x``.
        deriv_x: ``(params, x) -> df/dx``.
        description: Human-readable formula.
        jac_params: Optional ``(params, x) -> (len(x), arity)`` Jacobian in
            the parameters; finite differences otherwise.
    """

    arity: int
    eval: Callable
    deriv_x: Callable
    description: str = ""
    jac_params: Callable | None = None

    def jacobian(self, params, x) -> np.ndarray:
        if self.jac_params is not None:
            return np.asarray(self.jac_params(params, x), dtype=float).reshape(len(x), self.arity)
        p = np.asarray(params, dtype=float)
        J = np.empty((len(x), self.arity))
        for k in range(self.arity):
            h = 1e-7 * max(1.0, abs(p[k]))
            up, dn = p.copy(), p.copy()
            up[k] += h
            dn[k] -= h
            J[:, k] = (self.eval(up, x) - self.eval(dn, x)) / (2 * h)
        return J

    def consistency_error(self, params, probes) -> float:
        """Max relative gap between ``deriv_x`` and a central difference."""
        probes = np.asarray(probes, dtype=float)
        h = np.maximum(1e-6, 1e-7 * np.abs(probes))
        fd = (self.eval(params, probes + h) - self.eval(params, probes - h)) / (2 * h)
        an = self.deriv_x(params, probes)
        return float(np.max(np.abs(fd - an) / np.maximum(np.abs(an), 1e-12)))


def quadratic_model() -> ParametricModel:
    def f(p, x):
        return p[0] * x / (1.0 - (1.0 - p[0]) * x)

    def fx(p, x):
        return p[0] / (1.0 - (1.0 - p[0]) * x) ** 2

    def fp(p, x):
        return (x * (1.0 - x) / (1.0 - (1.0 - p[0]) * x) ** 2)[:, None]

    return ParametricModel(1, f, fx, "a x / (1 - (1 - a) x)", fp)


def cubic_model() -> ParametricModel:
    def f(p, x):
        return p[0] * x / np.sqrt(1.0 + (p[0] ** 2 - 1.0) * x * x)

    def fx(p, x):
        return p[0] / (1.0 + (p[0] ** 2 - 1.0) * x * x) ** 1.5

    return ParametricModel(1, f, fx, "a x / sqrt(1 + (a^2 - 1) x^2)")


def singular_model() -> ParametricModel:
    def f(p, x):
        return np.expm1(p[0] * np.log1p(2.0 * x)) / 2.0

    def fx(p, x):
        return p[0] * np.exp((p[0] - 1.0) * np.log1p(2.0 * x))

    return ParametricModel(1, f, fx, "((2x + 1)^a - 1) / 2")


MODELS = {"quadratic": quadratic_model, "cubic": cubic_model, "singular": singular_model}


def levenberg_marquardt(residual, jacobian, p0, max_iter: int = 500, xtol: float = 1e-13, ftol: float = 1e-15):
    """Minimise ``|residual(p)|^2`` by damped Gauss-Newton.

    Returns ``(p, cost, iterations)``.

    Raises:
        SingularJacobian: the Jacobian has deficient column rank at the start.
        NoConvergence: ``max_iter`` reached.
    """
    p = np.asarray(p0, dtype=float).copy()
    r = residual(p)
    if not np.all(np.isfinite(r)):
        raise NoConvergence("residual is not finite at the initial guess")
    cost = float(r @ r)
    J = jacobian(p)
    if J.shape[0] < J.shape[1] or np.linalg.matrix_rank(J) < J.shape[1]:
        raise SingularJacobian(f"Jacobian of shape {J.shape} is rank deficient")
    mu = 1e-3 * float(np.max(np.sum(J * J, axis=0)))
    for it in range(1, max_iter + 1):
        A = J.T @ J
        g = J.T @ r
        if np.max(np.abs(g)) <= 1e-300:
            return p, cost, it
        accepted = False
        while mu < 1e300:
            try:
                step = -np.linalg.solve(A + mu * np.diag(np.maximum(np.diag(A), 1e-300)), g)
            except np.linalg.LinAlgError:
                mu *= 10.0
                continue
            p_new = p + step
            with np.errstate(all="ignore"):
                r_new = residual(p_new)
            c_new = float(r_new @ r_new) if np.all(np.isfinite(r_new)) else math.inf
            if c_new <= cost:
                accepted = True
                break
            mu *= 10.0
        if not accepted:
            return p, cost, it
        small_step = np.max(np.abs(step)) <= xtol * (1.0 + np.max(np.abs(p)))
        small_gain = cost - c_new <= ftol * max(cost, 1e-300)
        p, r, cost = p_new, r_new, c_new
        mu = max(mu / 10.0, 1e-15)
        if small_step or small_gain:
            return p, cost, it
        J = jacobian(p)
    raise NoConvergence(f"no convergence after {max_iter} iterations")


def fit_parametric(pairs: PairSet, model: ParametricModel, init, base_hint: float | None = None,
                   max_iter: int = 500) -> PropagationMap:
    """Least-squares fit of ``model`` to the pairs.

    The returned map records ``info["params"]`` and the RMS residual.
    """
    if len(pairs) < model.arity:
        raise SingularJacobian(f"{len(pairs)} pairs cannot determine {model.arity} parameters")
    x, y = pairs.x, pairs.y
    p, cost, _ = levenberg_marquardt(
        lambda p: model.eval(p, x) - y, lambda p: model.jacobian(p, x), init, max_iter=max_iter,
    )
    frozen = p.copy()
    smap = ScalarMap(lambda z: model.eval(frozen, z), lambda z: model.deriv_x(frozen, z))
    return build_map(smap, pairs.hull, pairs.delta_t, base_hint, math.sqrt(cost / len(pairs)),
                     info={"fitter": "parametric", "model": model.description, "params": frozen.tolist()})


def _rms(r: BarycentricRational, pairs: PairSet) -> float:
    d = r(pairs.x) - pairs.y
    return float(np.sqrt(np.mean(d * d)))


def select_support_size(x, y, candidates=range(2, 9), folds: int = 5, seed: int = 0) -> int:
    """Number of support nodes for a least-squares rational, by cross-validation.

    Uses the one-standard-error rule: the smallest candidate whose mean
    held-out squared error is within one standard error of the best.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    idx = np.random.default_rng(seed).permutation(x.size)
    scores = {}
    for k in candidates:
        errs = []
        for f in range(folds):
            test = idx[f::folds]
            train = np.setdiff1d(idx, test)
            if train.size < 2 * k - 1:
                break
            r = lsq_fit(x[train], y[train], k)
            with np.errstate(all="ignore"):
                d = r(x[test]) - y[test]
            errs.append(float(np.mean(d * d)))
        if len(errs) == folds and np.all(np.isfinite(errs)):
            scores[k] = (float(np.mean(errs)), float(np.std(errs)) / math.sqrt(folds))
    if not scores:
        raise PreconditionError("too few pairs to cross-validate any support size")
    best = min(scores, key=lambda k: scores[k][0])
    threshold = scores[best][0] + scores[best][1]
    return min(k for k, (m, _) in scores.items() if m <= threshold)


def fit_rational_barycentric(pairs: PairSet, tol: float = 1e-13, max_support: int = 100,
                             mode: str = "interpolate", n_support: int | str | None = None,
                             base_hint: float | None = None) -> PropagationMap:
    """Barycentric rational fit of ``D``.

    ``mode="interpolate"`` runs the greedy support-point fitter to ``tol``.
    If the final iterate has a real pole in the data hull, the most accurate
    pole-free earlier iterate is used instead.

    ``mode="lsq"`` fits a rational with ``n_support`` nodes in the
    least-squares sense, for noisy pairs. ``n_support="auto"`` picks the size
    by cross-validation. Near-cancelling pole/zero pairs are removed; if a
    real pole remains inside the hull, the fit is retried with one node fewer
    down to two nodes.

    Raises:
        SpuriousPole: every candidate has a pole inside the hull.
    """
    if len(pairs) < 3:
        raise PreconditionError("need at least 3 pairs for a rational fit")
    if not tol > 0:
        raise PreconditionError("tol must be positive")
    lo, hi = pairs.hull
    if mode == "interpolate":
        _, history = aaa_fit(pairs.x, pairs.y, tol=tol, max_support=max_support)
        chosen = None
        for r, err in sorted(history, key=lambda item: item[1]):
            if r.real_poles_in(lo, hi).size == 0:
                chosen = r
                break
        if chosen is None:
            raise SpuriousPole("every rational iterate has a pole inside the data hull")
    elif mode == "lsq":
        if n_support is None:
            raise PreconditionError("mode='lsq' needs n_support")
        if n_support == "auto":
            n_support = select_support_size(pairs.x, pairs.y)
        if not isinstance(n_support, (int, np.integer)) or n_support < 2:
            raise PreconditionError("n_support must be an integer >= 2 or 'auto'")
        chosen, bad = None, np.empty(0)
        for k in range(int(n_support), 1, -1):
            r = remove_doublets(lsq_fit(pairs.x, pairs.y, k), lo, hi)
            bad = r.real_poles_in(lo, hi)
            if bad.size == 0:
                chosen = r
                break
        if chosen is None:
            raise SpuriousPole(f"least-squares rational has pole(s) at {np.sort(bad)}")
    else:
        raise PreconditionError(f"unknown mode {mode!r}")
    smap = ScalarMap(chosen, chosen.derivative)
    return build_map(smap, (lo, hi), pairs.delta_t, base_hint, _rms(chosen, pairs),
                     info={"fitter": "rational", "mode": mode, "support": len(chosen), "rational": chosen,
                           "eval_scale": float(np.max(np.abs(pairs.y)))})


def fit_monotone_spline(pairs: PairSet, base_hint: float | None = None) -> PropagationMap:
    """Monotone piecewise-cubic (PCHIP) interpolant through the pairs."""
    if len(pairs) < 2:
        raise PreconditionError("need at least 2 pairs")
    if np.any(np.diff(pairs.y) < 0):
        raise NonMonotoneData("y is not increasing in x; D must be increasing")
    spline = PchipInterpolator(pairs.x, pairs.y, extrapolate=True)
    dspline = spline.derivative()
    smap = ScalarMap(lambda z: spline(z), lambda z: dspline(z))
    return build_map(smap, pairs.hull, pairs.delta_t, base_hint, _rms(spline, pairs),
                     info={"fitter": "spline", "eval_scale": float(np.max(np.abs(pairs.y)))})
