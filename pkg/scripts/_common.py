"""Shared runner for the scenario scripts."""

import argparse
from pathlib import Path

from groupdyn.experiments import ExperimentSpec, run_experiment
from groupdyn.io import write_json, write_rows_csv, write_summary


def run_scenario(name, description):
    parser = argparse.ArgumentParser(description=description)
    parser.add_argument("--out", default=f"results/{name}")
    parser.add_argument("--seeds", type=int, default=None, help="number of seeds (default: scenario preset)")
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args()

    seeds = None if args.seeds is None else list(range(args.seeds))
    table = run_experiment(ExperimentSpec(name, seeds=seeds), n_jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_json(table.metadata, out / "metadata.json")
    write_summary(table, out / "summary.csv", "csv")
    write_summary(table, out / "summary.json", "json")
    write_rows_csv(table, out / "rows.csv")

    print(f"{name}: K={table.k_groups}, {len(table.seeds)} seeds -> {out}")
    print(f"{'beta':>6} {'ratio':>9} {'max_share':>10} {'gini':>8}")
    for b in table.betas:
        m = table.mean_stats(b)
        print(f"{b:>6.2f} {m['ratio']:>9.3f} {m['max_share']:>10.4f} {m['gini']:>8.4f}")
    return table
