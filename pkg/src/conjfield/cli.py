"""Command-line front end.

Subcommands::

    conjfield simulate  --example quadratic --n 100 --sigma 0.5 --pairs-out pairs.csv
    conjfield recover   --pairs pairs.csv --fitter parametric --model quadratic --out field.csv
    conjfield flow      --pairs pairs.csv --fitter rational --x0 0.5 --t 0.5 1 --out flow.csv
    conjfield diagnose  --config sweep.json --csv report.csv --json report.json

Every subcommand accepts ``--config FILE``: a JSON object whose keys are the
long option names with dashes replaced by underscores. Flags given on the
command line override the file. Exit codes: 0 success, 2 usage error,
3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .data import (
    PairSet,
    TimeSeriesSet,
    Series,
    build_pairs_resampled,
    build_pairs_uniform,
    load_pairs,
    load_series,
    write_pairs,
    write_series,
)
from .diagnostics import DiagnosticsReport, relative_errors, write_report_csv, write_report_json
from .domain import subdivide
from .errors import ConjFieldError, DataError, NumericalError, OutOfRange, PreconditionError
from .experiments import ExperimentConfig, noise_experiment, perturb
from .fitting import MODELS, fit_monotone_spline, fit_parametric, fit_rational_barycentric
from .julia import recover_field
from .schroeder import flow as fractional_flow
from .schroeder import solve_schroeder
from .truth import get_example

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 2, 3, 4

DEFAULT_X_RANGE = {"quadratic": [0.0, 1.5], "cubic": [-2.0, 2.0], "singular": [-0.5, 1.2]}

DEFAULTS = {
    "simulate": {
        "example": "quadratic", "a": None, "n": 100, "sigma": 0.0, "noise": "additive-interval",
        "seed": 0, "x_range": None, "pairs_out": None, "trajectory_out": None, "x0": None,
        "steps": 50, "dt": 1.0,
    },
    "recover": {
        "pairs": None, "trajectory": None, "delta_t": 1.0, "time_interp": "monotone-cubic",
        "fitter": "rational", "model": None, "init": None, "tol": 1e-13, "n_support": None,
        "solver": "fixed-point", "grid": 401, "grid_range": None, "out": None, "coeffs_out": None,
        "report_out": None, "reference": None, "reference_a": None,
    },
    "flow": {
        "pairs": None, "trajectory": None, "delta_t": 1.0, "time_interp": "monotone-cubic",
        "fitter": "rational", "model": None, "init": None, "tol": 1e-13, "n_support": None,
        "x0": None, "t": None, "grid": 401, "out": None,
    },
    "diagnose": {"csv": None, "json": None},
}


class UsageError(Exception):
    pass


# --- argument parsing ------------------------------------------------------

def _add_fit_options(p: argparse.ArgumentParser) -> None:
    src = p.add_argument_group("input")
    src.add_argument("--pairs", help="pair CSV (x,y)")
    src.add_argument("--trajectory", help="trajectory CSV (series_id,t,x)")
    src.add_argument("--delta-t", type=float, help="time step of the map (default 1)")
    src.add_argument("--time-interp", choices=["monotone-cubic", "cubic", "linear"],
                     help="time interpolation for irregular series")
    fit = p.add_argument_group("fit")
    fit.add_argument("--fitter", choices=["parametric", "rational", "spline"])
    fit.add_argument("--model", choices=sorted(MODELS), help="family for --fitter parametric")
    fit.add_argument("--init", type=float, nargs="+", help="initial parameters for --fitter parametric")
    fit.add_argument("--tol", type=float, help="rational interpolation tolerance")
    fit.add_argument("--n-support", help="least-squares rational support size, or 'auto'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="conjfield", description="Recover a scalar vector field from samples of its flow.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write synthetic pairs and trajectories")
    p.add_argument("--config")
    p.add_argument("--example", choices=["quadratic", "cubic", "singular"])
    p.add_argument("--a", type=float)
    p.add_argument("--n", type=int, help="number of pairs")
    p.add_argument("--sigma", type=float)
    p.add_argument("--noise", choices=["additive-interval", "relative"])
    p.add_argument("--seed", type=int)
    p.add_argument("--x-range", type=float, nargs=2)
    p.add_argument("--pairs-out")
    p.add_argument("--trajectory-out")
    p.add_argument("--x0", type=float, nargs="+", help="trajectory start points")
    p.add_argument("--steps", type=int, help="samples per trajectory")
    p.add_argument("--dt", type=float, help="trajectory sampling step")

    p = sub.add_parser("recover", help="fit D and recover the field")
    p.add_argument("--config")
    _add_fit_options(p)
    p.add_argument("--solver", choices=["product", "fixed-point", "least-squares"])
    p.add_argument("--grid", type=int, help="number of output points (default 401)")
    p.add_argument("--grid-range", type=float, nargs=2, help="output interval (default: data hull)")
    p.add_argument("--out", help="field CSV (x,v)")
    p.add_argument("--coeffs-out", help="JSON with fitted coefficients")
    p.add_argument("--report-out", help="JSON diagnostics report")
    p.add_argument("--reference", choices=["quadratic", "cubic", "singular"],
                   help="known field for error columns")
    p.add_argument("--reference-a", type=float)

    p = sub.add_parser("flow", help="fractional iterates D^t(x0)")
    p.add_argument("--config")
    _add_fit_options(p)
    p.add_argument("--x0", type=float)
    p.add_argument("--t", type=float, nargs="+")
    p.add_argument("--grid", type=int, help="points in the conjugation table")
    p.add_argument("--out")

    p = sub.add_parser("diagnose", help="noise sweep report")
    p.add_argument("--config", help="experiment JSON")
    p.add_argument("--example", choices=["quadratic", "cubic", "singular"])
    p.add_argument("--sigmas", type=float, nargs="*")
    p.add_argument("--seed", type=int)
    p.add_argument("--replicates", type=int)
    p.add_argument("--n-pairs", type=int)
    p.add_argument("--fitter", choices=["parametric", "rational", "spline"])
    p.add_argument("--solver", choices=["product", "fixed-point", "least-squares"])
    p.add_argument("--csv")
    p.add_argument("--json")
    return parser


def _load_config(path) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"config file not found: {p}")
    try:
        cfg = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{p}: invalid JSON ({exc})") from None
    if not isinstance(cfg, dict):
        raise UsageError(f"{p}: top level must be an object")
    return cfg


def resolve(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    cmd = args.command
    cfg = _load_config(args.config)
    given = {k: v for k, v in vars(args).items() if v is not None and k not in ("command", "config")}
    if cmd == "diagnose":
        return {**DEFAULTS[cmd], **cfg, **given}
    unknown = set(cfg) - set(DEFAULTS[cmd])
    if unknown:
        raise UsageError(f"unknown config keys for {cmd}: {sorted(unknown)}")
    return {**DEFAULTS[cmd], **cfg, **given}


def _check_output(path) -> None:
    if path is None:
        return
    parent = Path(path).resolve().parent
    if not parent.is_dir():
        raise FileNotFoundError(f"output directory does not exist: {parent}")


def _check_input(path) -> None:
    if path is not None and not Path(path).is_file():
        raise FileNotFoundError(f"input file not found: {path}")


# --- shared pipeline pieces -------------------------------------------------

def load_input(opts: dict) -> PairSet:
    if (opts["pairs"] is None) == (opts["trajectory"] is None):
        raise UsageError("give exactly one of --pairs or --trajectory")
    if opts["pairs"] is not None:
        return load_pairs(opts["pairs"])
    ts = load_series(opts["trajectory"])
    dt = float(opts["delta_t"])
    try:
        return build_pairs_uniform(ts, dt)
    except DataError:
        return build_pairs_resampled(ts, dt, opts["time_interp"])


def _n_support(value):
    if value is None or value == "auto":
        return "auto"
    try:
        return int(value)
    except (TypeError, ValueError):
        raise UsageError(f"--n-support must be an integer or 'auto', got {value!r}") from None


def fit_map(pairs: PairSet, opts: dict):
    fitter = opts["fitter"]
    if fitter == "parametric":
        if opts["model"] is None:
            raise UsageError("--fitter parametric needs --model")
        model = MODELS[opts["model"]]()
        init = opts["init"] if opts["init"] is not None else [0.5] * model.arity
        return fit_parametric(pairs, model, init)
    if fitter == "rational":
        if opts["n_support"] is not None:
            return fit_rational_barycentric(pairs, mode="lsq", n_support=_n_support(opts["n_support"]))
        return fit_rational_barycentric(pairs, tol=float(opts["tol"]))
    if fitter == "spline":
        return fit_monotone_spline(pairs)
    raise UsageError(f"unknown fitter {fitter!r}")


def _write_xy(path, header, xs, ys, extra=None) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for i, (x, y) in enumerate(zip(xs, ys)):
            cells = [repr(float(x)), repr(float(y))]
            if extra is not None:
                cells.append(extra[i])
            fh.write(",".join(cells) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


# --- commands ----------------------------------------------------------------

def cmd_simulate(opts: dict) -> int:
    if opts["pairs_out"] is None and opts["trajectory_out"] is None:
        raise UsageError("nothing to write: give --pairs-out and/or --trajectory-out")
    for key in ("pairs_out", "trajectory_out"):
        _check_output(opts[key])
    ex = get_example(opts["example"], opts["a"])
    rng = np.random.default_rng(int(opts["seed"]))
    sigma = float(opts["sigma"])
    if opts["pairs_out"] is not None:
        lo, hi = opts["x_range"] or DEFAULT_X_RANGE[ex.name]
        x = np.linspace(float(lo), float(hi), int(opts["n"]))
        y = perturb(ex.D(x), sigma, opts["noise"], rng) if sigma > 0 else ex.D(x)
        write_pairs(PairSet(x, y, 1.0), opts["pairs_out"])
    if opts["trajectory_out"] is not None:
        if not opts["x0"]:
            raise UsageError("--trajectory-out needs --x0")
        series = []
        for k, x0 in enumerate(opts["x0"]):
            t, x = ex.trajectory(float(x0), int(opts["steps"]), float(opts["dt"]))
            if sigma > 0:
                x = perturb(x, sigma, opts["noise"], rng)
            series.append(Series(f"s{k}", t, x))
        write_series(TimeSeriesSet(tuple(series)), opts["trajectory_out"])
    return EXIT_OK


def cmd_recover(opts: dict) -> int:
    for key in ("pairs", "trajectory"):
        _check_input(opts[key])
    for key in ("out", "coeffs_out", "report_out"):
        _check_output(opts[key])
    pairs = load_input(opts)
    D = fit_map(pairs, opts)
    lo, hi = opts["grid_range"] or D.domain
    grid = np.linspace(float(lo), float(hi), int(opts["grid"]))
    est = recover_field(D, opts["solver"], grid=grid)
    v = np.asarray(est(grid), dtype=float)
    report = est.diagnostics
    if opts["reference"] is not None:
        ref = get_example(opts["reference"], opts["reference_a"])
        with np.errstate(all="ignore"):
            report.eps_D = relative_errors(ref.D, D, grid)
            report.eps_Dprime = relative_errors(ref.dD, D.derivative, grid)
            report.eps_v = relative_errors(ref.v, est, grid)
        denom = report.eps_D + report.eps_Dprime
        report.C_v = report.eps_v / denom if denom > 0 else float("nan")
    if opts["out"] is not None:
        _write_xy(opts["out"], ["x", "v"], grid, v)
    else:
        _write_stdout(grid, v)
    if opts["coeffs_out"] is not None:
        coeffs = {"lambda": D.lam, "fixed_point": D.base_fixed_point, "fitter": D.info.get("fitter")}
        if "params" in D.info:
            coeffs["map_params"] = D.info["params"]
            coeffs["map_model"] = D.info.get("model")
        if est.parametric_form is not None:
            model, params = est.parametric_form
            coeffs["field_model"] = model.description
            coeffs["field_params"] = list(params)
        with open(opts["coeffs_out"], "w", encoding="utf-8") as fh:
            json.dump(_jsonable(coeffs), fh, indent=2, sort_keys=True)
            fh.write("\n")
    if opts["report_out"] is not None:
        write_report_json([report], opts["report_out"])
    return EXIT_OK


def _write_stdout(xs, ys) -> None:
    out = sys.stdout
    out.write("x,v\n")
    for x, y in zip(xs, ys):
        out.write(f"{float(x)!r},{float(y)!r}\n")


def cmd_flow(opts: dict) -> int:
    for key in ("pairs", "trajectory"):
        _check_input(opts[key])
    _check_output(opts["out"])
    if opts["x0"] is None or not opts["t"]:
        raise UsageError("flow needs --x0 and --t")
    x0 = float(opts["x0"])
    pairs = load_input(opts)
    D = fit_map(pairs, opts)
    piece = next((s for s in subdivide(D) if s.holds(np.array([x0]))[0] and s.attractor_end is not None), None)
    if piece is None:
        if any(abs(f.location - x0) <= 1e-12 * (1 + abs(x0)) for f in D.fixed_points):
            rows = [(float(t), x0, "ok") for t in opts["t"]]
            return _emit_flow(rows, opts["out"])
        raise PreconditionError(f"x0={x0} is not inside a subinterval with a fixed end")
    conj = solve_schroeder(D, piece, n=int(opts["grid"]))
    rows = []
    for t in opts["t"]:
        try:
            rows.append((float(t), fractional_flow(D, conj, x0, float(t)), "ok"))
        except OutOfRange as exc:
            status = "out-of-range"
            if exc.boundary_time is not None and np.isfinite(exc.boundary_time):
                status += f" boundary_time={exc.boundary_time!r}"
            rows.append((float(t), float("nan"), status))
    return _emit_flow(rows, opts["out"])


def _emit_flow(rows, path) -> int:
    lines = ["t,x,status"] + [f"{t!r},{x!r},{s}" for t, x, s in rows]
    text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")
    return EXIT_OK


def cmd_diagnose(opts: dict) -> int:
    for key in ("csv", "json"):
        _check_output(opts[key])
    exp_keys = {k: v for k, v in opts.items() if k not in ("csv", "json")}
    config = ExperimentConfig.from_dict(exp_keys)
    rows = noise_experiment(config) if config.sigmas else []
    if opts["csv"] is not None:
        write_report_csv(rows, opts["csv"])
    if opts["json"] is not None:
        write_report_json(rows, opts["json"])
    if opts["csv"] is None and opts["json"] is None:
        for r in rows:
            sys.stdout.write(f"sigma={r.sigma!r} eps_D={r.eps_D!r} eps_Dprime={r.eps_Dprime!r} "
                             f"eps_v={r.eps_v!r} C_v={r.C_v!r} flags={';'.join(r.flags)}\n")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "recover": cmd_recover, "flow": cmd_flow, "diagnose": cmd_diagnose}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = resolve(args)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return COMMANDS[args.command](opts)
    except (UsageError, PreconditionError) as exc:
        print(f"conjfield {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FileNotFoundError) as exc:
        print(f"conjfield {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, ConjFieldError) as exc:
        print(f"conjfield {args.command}: numerical error ({type(exc).__module__}.{type(exc).__name__}): {exc}",
              file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
