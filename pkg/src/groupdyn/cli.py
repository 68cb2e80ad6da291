"""Command-line entry point.

Every subcommand reads an optional run document (``--config``), applies
``--set dotted.key=value`` overrides and writes into ``output.directory``.
Failures are reported as one JSON record on stderr with exit codes
2 (configuration), 3 (numerical) and 4 (I/O).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import (
    apply_set_args,
    load_config,
    materialize,
    parse_value,
    to_model_params,
    to_sim_config,
)
from .errors import ConfigError, GroupDynError, NumericalError
from .experiments import SCENARIOS, ExperimentSpec, run_experiment
from .io import (
    base_metadata,
    write_json,
    write_rows_csv,
    write_summary,
    write_trajectory_csv,
)
from .meanfield import PerturbationInput, compare_first_order, integrate_ode, solve_fixed_point
from .model import resolve_bias, uniform_state
from .sim import run_ensemble, run_simulation
from .spectral import hessian_degeneracy_report, stability_report

EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _vector(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def _seeds(text):
    """``0-19``, ``3`` or ``1,5,9``."""
    try:
        if "-" in text and "," not in text:
            lo, hi = text.split("-")
            return list(range(int(lo), int(hi) + 1))
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(f"cannot parse seeds {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="groupdyn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="run document (YAML/JSON) or an output metadata.json")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a dotted config key; repeatable")
        p.add_argument("--out", help="output directory (overrides output.directory)")
        return p

    common(sub.add_parser("simulate", help="one entrant or redistribution run"))
    p = common(sub.add_parser("ensemble", help="replicas over consecutive seeds"))
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--base-seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)

    p = common(sub.add_parser("fixedpoint", help="solve p(pi) = pi"))
    p.add_argument("--initial", type=_vector)
    p.add_argument("--relax", type=float, default=0.5)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-iter", type=int, default=100_000)

    p = common(sub.add_parser("ode", help="integrate dpi/dt = p(pi) - pi"))
    p.add_argument("--initial", type=_vector)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--t-end", type=float, default=50.0)
    p.add_argument("--record-every", type=int, default=1)

    p = common(sub.add_parser("stability", help="Jacobian spectrum at a point or the solved fixed point"))
    p.add_argument("--point", type=_vector)
    p.add_argument("--h", type=float, default=1e-6)

    p = common(sub.add_parser("hessian", help="Hessian degeneracy survey of the attraction kernel"))
    p.add_argument("--grid", type=int, default=99)

    p = common(sub.add_parser("approx", help="first-order vs numerical asymmetric equilibrium"))
    p.add_argument("--eta", type=_vector, required=True, help="zero-sum bias perturbation")
    p.add_argument("--eps", type=float, default=None, help="symmetric base bias (default model.bias.mu)")

    p = common(sub.add_parser("experiment", help="canned scenario"))
    p.add_argument("scenario", choices=sorted(SCENARIOS))
    p.add_argument("--seeds", type=_seeds)
    p.add_argument("--betas", type=_vector)
    p.add_argument("--jobs", type=int, default=1)
    return parser


def _document(args):
    doc = load_config(args.config) if args.config else materialize()
    doc = apply_set_args(doc, args.set)
    if args.out:
        doc["output"]["directory"] = args.out
    return doc


def _outdir(doc) -> Path:
    out = Path(doc["output"]["directory"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _state_or_uniform(values, k):
    if values is None:
        return uniform_state(k)
    if len(values) != k:
        raise ConfigError(f"state has {len(values)} entries, expected K={k}")
    pi = np.asarray(values, dtype=float)
    return pi / pi.sum()


def cmd_simulate(args):
    doc = _document(args)
    config = to_sim_config(doc)
    traj = run_simulation(config)
    out = _outdir(doc)
    meta = base_metadata("simulate", seed=config.seed, config=doc, bias=traj.eps)
    write_json(meta, out / "metadata.json")
    if "csv" in doc["output"]["formats"]:
        write_trajectory_csv(traj, out / "trajectory.csv")
    if "json" in doc["output"]["formats"]:
        final = {"t": traj.times[-1], "counts": traj.final_counts, "pi": traj.final_pi, "p": traj.final_p}
        write_summary(final, out / "final.json", "json", meta)
    return 0


def cmd_ensemble(args):
    doc = _document(args)
    config = to_sim_config(doc)
    base = config.seed if args.base_seed is None else args.base_seed
    summary = run_ensemble(config, args.runs, base, n_jobs=args.jobs)
    out = _outdir(doc)
    meta = base_metadata("ensemble", base_seed=base, n_runs=args.runs, config=doc)
    write_json(meta, out / "metadata.json")
    _emit(summary, out, "ensemble", doc, meta)
    return 0


def _emit(obj, out, stem, doc, meta):
    for fmt in doc["output"]["formats"]:
        write_summary(obj, out / f"{stem}.{fmt}", fmt, meta)


def cmd_fixedpoint(args):
    doc = _document(args)
    params = to_model_params(doc)
    k = doc["model"]["k_groups"]
    initial = None if args.initial is None else _state_or_uniform(args.initial, k)
    res = solve_fixed_point(params, initial, k=k, relax=args.relax, tol=args.tol, max_iter=args.max_iter)
    out = _outdir(doc)
    meta = base_metadata("fixedpoint", config=doc, bias=resolve_bias(params, k))
    _emit(res, out, "fixedpoint", doc, meta)
    if not res.converged:
        raise NumericalError(f"fixed-point iteration did not converge (residual {res.residual_norm:.3g})")
    return 0


def cmd_ode(args):
    doc = _document(args)
    params = to_model_params(doc)
    k = doc["model"]["k_groups"]
    traj = integrate_ode(_state_or_uniform(args.initial, k), params, args.dt, args.t_end,
                         record_every=args.record_every)
    out = _outdir(doc)
    meta = base_metadata("ode", config=doc, dt=args.dt, t_end=args.t_end, bias=traj.eps)
    write_json(meta, out / "metadata.json")
    write_trajectory_csv(traj, out / "trajectory.csv")
    return 0


def cmd_stability(args):
    doc = _document(args)
    params = to_model_params(doc)
    k = doc["model"]["k_groups"]
    if args.point is None:
        fp = solve_fixed_point(params, k=k)
        if not fp.converged:
            raise NumericalError("could not locate a fixed point to analyse")
        point = fp.pi_star
    else:
        point = _state_or_uniform(args.point, k)
    report = stability_report(params, point, args.h)
    out = _outdir(doc)
    meta = base_metadata("stability", config=doc, h=args.h)
    _emit(report, out, "stability", doc, meta)
    return 0


def cmd_hessian(args):
    doc = _document(args)
    report = hessian_degeneracy_report(args.grid)
    out = _outdir(doc)
    meta = base_metadata("hessian", grid_n=args.grid)
    _emit(report, out, "hessian", doc, meta)
    if not report.degenerate:
        raise NumericalError("Hessian degeneracy checks failed")
    return 0


def cmd_approx(args):
    doc = _document(args)
    m = doc["model"]
    eps = m["bias"]["mu"] if args.eps is None else args.eps
    inp = PerturbationInput(theta=m["theta_scalar"], beta=m["beta"], eps_base=eps, eta_perturb=tuple(args.eta))
    cmp = compare_first_order(inp)
    out = _outdir(doc)
    meta = base_metadata("approx", config=doc)
    payload = {
        "theta": inp.theta, "beta": inp.beta, "eps_base": inp.eps_base, "eta": inp.eta_perturb,
        "approx": cmp["approx"], "numeric": cmp["numeric"].pi_star,
        "numeric_converged": cmp["numeric"].converged, "max_abs_error": cmp["max_abs_error"],
    }
    write_summary(payload, out / "approx.json", "json", meta)
    return 0


def cmd_experiment(args):
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, text = item.split("=", 1)
        overrides[key.strip()] = parse_value(text)
    if args.betas is not None:
        overrides["betas"] = args.betas
    table = run_experiment(ExperimentSpec(args.scenario, overrides, args.seeds), n_jobs=args.jobs)
    # scenario presets own the model; the run document only supplies output settings
    out_doc = load_config(args.config) if args.config else materialize()
    if args.out:
        out_doc["output"]["directory"] = args.out
    out = _outdir(out_doc)
    write_json(table.metadata, out / "metadata.json")
    for fmt in out_doc["output"]["formats"]:
        write_summary(table, out / f"summary.{fmt}", fmt)
    write_rows_csv(table, out / "rows.csv")
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "ensemble": cmd_ensemble,
    "fixedpoint": cmd_fixedpoint,
    "ode": cmd_ode,
    "stability": cmd_stability,
    "hessian": cmd_hessian,
    "approx": cmd_approx,
    "experiment": cmd_experiment,
}


def _fail(exc, code):
    record = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    print(json.dumps(record), file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        return _fail(exc, EXIT_CONFIG)
    except (NumericalError, GroupDynError, FloatingPointError) as exc:
        return _fail(exc, EXIT_NUMERIC)
    except OSError as exc:
        return _fail(exc, EXIT_IO)


if __name__ == "__main__":
    sys.exit(main())
