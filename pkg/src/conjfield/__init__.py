"""Recover a scalar autonomous vector field ``x' = v(x)`` from its unit-time map.

Pipeline: samples of trajectories -> pairs ``(x, D(x))`` -> fitted ``D`` ->
solution ``g`` of ``g(D(x)) = D'(x) g(x)`` -> ``v = log(D'(fp)) g``.
"""

__version__ = "0.1.0"

from .data import PairSet, Series, TimeSeriesSet, build_pairs_resampled, build_pairs_uniform
from .diagnostics import DiagnosticsReport, relative_errors, stability_constant
from .domain import FixedPoint, Subinterval, find_fixed_points, subdivide
from .experiments import ExperimentConfig, noise_experiment
from .fitting import fit_monotone_spline, fit_parametric, fit_rational_barycentric
from .julia import (
    FieldEstimate,
    julia_fixed_point,
    julia_infinite_product,
    julia_least_squares,
    recover_field,
)
from .propagation import PropagationMap, build_map, exact_map
from .schroeder import flow, koenigs_h, solve_schroeder

__all__ = [
    "DiagnosticsReport", "ExperimentConfig", "FieldEstimate", "FixedPoint", "PairSet", "PropagationMap",
    "Series", "Subinterval", "TimeSeriesSet", "build_map", "build_pairs_resampled", "build_pairs_uniform",
    "exact_map", "find_fixed_points", "fit_monotone_spline", "fit_parametric", "fit_rational_barycentric",
    "flow", "julia_fixed_point", "julia_infinite_product", "julia_least_squares", "koenigs_h",
    "noise_experiment", "recover_field", "relative_errors", "solve_schroeder", "stability_constant",
    "subdivide",
]
