"""CSV and JSON serialization of trajectories, reports and summary tables.

Floats are written with ``repr`` (shortest round-trip decimal), lines end in
``\\n`` and files are UTF-8, so equal results give byte-identical files.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, is_dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError
from .experiments import SummaryTable
from .meanfield import FixedPointResult
from .sampling import RNG_ALGORITHM
from .sim import EnsembleSummary, Trajectory
from .spectral import HessianReport, SpectralReport

TRAJECTORY_HEADER = ["t", "group", "n", "pi", "theta", "a", "p", "chosen"]
MODEL_VERSION = "1"


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def base_metadata(command: str, **extra) -> dict:
    meta = {
        "tool": "groupdyn",
        "version": __version__,
        "model_version": MODEL_VERSION,
        "rng": RNG_ALGORITHM,
        "command": command,
    }
    meta.update(extra)
    return meta


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def write_trajectory_csv(traj: Trajectory, path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(TRAJECTORY_HEADER)
        k = traj.pi.shape[1]
        for r, t in enumerate(traj.times):
            chosen = None
            if traj.chosen is not None and traj.chosen[r] >= 0:
                chosen = int(traj.chosen[r]) + 1
            for g in range(k):
                n = None if traj.counts is None else traj.counts[r, g]
                w.writerow([
                    fmt(t), g + 1, fmt(n), fmt(traj.pi[r, g]), fmt(traj.theta[r, g]),
                    fmt(traj.a[r, g]), fmt(traj.p[r, g]), fmt(chosen),
                ])


def read_trajectory_csv(path) -> dict:
    """Columns of a trajectory CSV as numpy arrays; empty cells become NaN."""
    with Path(path).open(encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if header != TRAJECTORY_HEADER:
        raise ConfigError(f"unexpected trajectory header {header}")
    cols = {}
    for j, name in enumerate(header):
        cols[name] = np.array([float(r[j]) if r[j] != "" else np.nan for r in body])
    return cols


def to_jsonable(obj):
    if isinstance(obj, Enum):
        return obj.value
    if is_dataclass(obj) and not isinstance(obj, type):
        return {k: to_jsonable(v) for k, v in asdict(obj).items()}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def write_json(doc: dict, path) -> None:
    text = json.dumps(to_jsonable(doc), indent=2, allow_nan=True)
    Path(path).write_text(text + "\n", encoding="utf-8")


def _payload(obj) -> dict:
    if isinstance(obj, SummaryTable):
        return {
            "kind": "summary_table",
            "scenario": obj.scenario,
            "betas": obj.betas,
            "seeds": obj.seeds,
            "rows": obj.rows,
            "stats": obj.stats,
            "seed_averaged": {str(b): obj.mean_stats(b) for b in obj.betas},
        }
    if isinstance(obj, FixedPointResult):
        return {"kind": "fixed_point", **to_jsonable(obj)}
    if isinstance(obj, SpectralReport):
        d = to_jsonable(obj)
        d["kind"] = "spectral_report"
        return d
    if isinstance(obj, HessianReport):
        return {"kind": "hessian_report", **obj.as_dict()}
    if isinstance(obj, EnsembleSummary):
        d = to_jsonable(obj)
        d["kind"] = "ensemble_summary"
        return d
    if isinstance(obj, dict):
        return to_jsonable(obj)
    raise ConfigError(f"cannot serialize {type(obj).__name__}")


def write_summary(obj, path, format: str = "json", metadata: dict | None = None) -> None:
    """Write a result as one self-describing JSON document or as CSV."""
    if format == "json":
        meta = metadata if metadata is not None else getattr(obj, "metadata", None) or base_metadata("summary")
        write_json({"metadata": meta, "payload": _payload(obj)}, path)
    elif format == "csv":
        with Path(path).open("w", encoding="utf-8", newline="") as fh:
            _write_csv(obj, _writer(fh))
    else:
        raise ConfigError(f"unknown summary format {format!r}")


def _write_csv(obj, w):
    if isinstance(obj, SummaryTable):
        _table_layout(obj, w)
    elif isinstance(obj, FixedPointResult):
        w.writerow(["group", "pi_star"])
        for g, v in enumerate(obj.pi_star):
            w.writerow([g + 1, fmt(v)])
        w.writerow([])
        w.writerow(["residual_norm", fmt(obj.residual_norm)])
        w.writerow(["iterations", obj.iterations])
        w.writerow(["converged", fmt(obj.converged)])
    elif isinstance(obj, SpectralReport):
        w.writerow(["index", "eig_re", "eig_im", "residual"])
        for i, (lam, res) in enumerate(zip(obj.eigenvalues, obj.residuals)):
            w.writerow([i + 1, fmt(lam.real), fmt(lam.imag), fmt(res)])
        w.writerow([])
        w.writerow(["tangent_index", "eig_re", "eig_im"])
        for i, lam in enumerate(obj.tangent_eigenvalues):
            w.writerow([i + 1, fmt(lam.real), fmt(lam.imag)])
        w.writerow([])
        w.writerow(["classification", obj.classification.value])
    elif isinstance(obj, EnsembleSummary):
        k = obj.final_pi.shape[1]
        w.writerow(["seed"] + [f"n_{g + 1}" for g in range(k)] + [f"pi_{g + 1}" for g in range(k)]
                   + ["ratio", "max_share", "gini"])
        for s, c, pi, st in zip(obj.seeds, obj.final_counts, obj.final_pi, obj.stats):
            w.writerow([s] + [fmt(v) for v in c] + [fmt(v) for v in pi]
                       + [fmt(st["ratio"]), fmt(st["max_share"]), fmt(st["gini"])])
        w.writerow(["mean", *[""] * k, *[fmt(v) for v in obj.mean_pi], "", "", ""])
        w.writerow(["std", *[""] * k, *[fmt(v) for v in obj.std_pi], "", "", ""])
    elif isinstance(obj, HessianReport):
        w.writerow(["quantity", "value"])
        for key, value in obj.as_dict().items():
            w.writerow([key, fmt(value)])
    else:
        raise ConfigError(f"cannot write {type(obj).__name__} as CSV")


def _table_layout(table: SummaryTable, w):
    """Group rows with Initial/Final column pairs per beta for the first seed,
    followed by a seed-averaged statistics block."""
    seed = table.seeds[0]
    header = ["group"]
    for b in table.betas:
        header += [f"beta={fmt(b)} initial", f"beta={fmt(b)} final"]
    w.writerow(header)
    cells = {b: table.cell_rows(b, seed) for b in table.betas}
    for g in range(table.k_groups):
        row = [g + 1]
        for b in table.betas:
            r = cells[b][g]
            row += [fmt(r["initial"]), fmt(r["final"])]
        w.writerow(row)
    w.writerow([])
    w.writerow(["statistic", *[f"beta={fmt(b)}" for b in table.betas]])
    w.writerow(["seed_shown", *[seed] * len(table.betas)])
    w.writerow(["n_seeds", *[len(table.seeds)] * len(table.betas)])
    means = [table.mean_stats(b) for b in table.betas]
    for key in ("ratio", "max_share", "gini"):
        w.writerow([f"mean_{key}", *[fmt(m[key]) for m in means]])


def write_rows_csv(table: SummaryTable, path) -> None:
    """Long format: one row per (beta, seed, group)."""
    cols = ["beta", "seed", "group", "initial", "final", "final_pi", "final_p"]
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(cols)
        for r in table.rows:
            w.writerow([fmt(r[c]) for c in cols])
