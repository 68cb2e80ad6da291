import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from groupdyn.config import (
    OUTPUT_DIR_ENV,
    apply_override,
    dump_config,
    load_config,
    materialize,
    to_sim_config,
)
from groupdyn.errors import ConfigError
from groupdyn.experiments import ExperimentSpec, run_experiment
from groupdyn.io import (
    TRAJECTORY_HEADER,
    base_metadata,
    read_trajectory_csv,
    to_jsonable,
    write_summary,
    write_trajectory_csv,
)
from groupdyn.meanfield import integrate_ode, solve_fixed_point
from groupdyn.model import ModelParams, uniform_state
from groupdyn.sim import SimConfig, run_ensemble, run_entry_process, run_redistribution
from groupdyn.spectral import hessian_degeneracy_report, stability_report


def test_defaults_materialized():
    doc = materialize()
    assert doc["model"]["beta"] == 0.5 and doc["model"]["smoothing"] == 1e-12
    assert doc["process"]["init"] == {"low": 1, "high": 10}
    assert doc["output"]["formats"] == ["csv", "json"]


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError):
        materialize({"model": {"gamma": 1}})
    with pytest.raises(ConfigError):
        materialize({"process": {"init": {"low": 1, "mid": 3}}})
    with pytest.raises(ConfigError):
        materialize({"extra": {}})


def test_invalid_values_rejected():
    with pytest.raises(ConfigError):
        materialize({"model": {"k_groups": 1}})
    with pytest.raises(ConfigError):
        materialize({"model": {"beta": "high"}})
    with pytest.raises(ConfigError):
        materialize({"output": {"formats": ["xml"]}})
    with pytest.raises(ConfigError):
        materialize({"model": {"k_groups": 2.5}})


def test_string_scientific_notation_coerced(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("model:\n  smoothing: 1e-12\n  k_groups: 3\nprocess:\n  init: [1, 2, 3]\n")
    doc = load_config(path)
    assert doc["model"]["smoothing"] == 1e-12
    assert to_sim_config(doc).init_counts == (1, 2, 3)


def test_env_output_directory(monkeypatch):
    monkeypatch.setenv(OUTPUT_DIR_ENV, "/tmp/somewhere")
    assert materialize()["output"]["directory"] == "/tmp/somewhere"


@settings(max_examples=25, deadline=None)
@given(k=st.integers(2, 20), beta=st.floats(-2, 3, allow_nan=False), t=st.integers(0, 5000),
       mode=st.sampled_from(["full", "reduced"]))
def test_config_round_trip_fixed_point(k, beta, t, mode, tmp_path_factory):
    doc = materialize({"model": {"k_groups": k, "beta": beta, "attraction_mode": mode}, "process": {"t_steps": t}})
    path = tmp_path_factory.mktemp("cfg") / "c.yaml"
    path.write_text(dump_config(doc))
    once = load_config(path)
    path.write_text(dump_config(once))
    assert load_config(path) == once == doc


def test_override_dotted_keys():
    doc = apply_override(materialize(), "model.bias.mu", 0.3)
    assert doc["model"]["bias"]["mu"] == 0.3
    with pytest.raises(ConfigError):
        apply_override(doc, "model.nothing", 1)


def test_metadata_file_accepted_as_config(tmp_path):
    doc = materialize({"model": {"beta": 1.5}})
    path = tmp_path / "metadata.json"
    path.write_text(json.dumps(base_metadata("simulate", config=doc)))
    assert load_config(path) == doc


def test_trajectory_csv_shape(tmp_path):
    traj = run_entry_process(SimConfig(k_groups=2, t_steps=0, init_counts=(1, 2)))
    path = tmp_path / "t.csv"
    write_trajectory_csv(traj, path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == TRAJECTORY_HEADER and len(rows) == 1 + 2
    assert rows[1][7] == ""


def test_trajectory_csv_round_trip_bit_exact(tmp_path):
    traj = run_entry_process(SimConfig(k_groups=4, t_steps=50, seed=2))
    path = tmp_path / "t.csv"
    write_trajectory_csv(traj, path)
    cols = read_trajectory_csv(path)
    k = 4
    for name in ("pi", "theta", "a", "p"):
        np.testing.assert_array_equal(cols[name].reshape(-1, k), getattr(traj, name))
    np.testing.assert_array_equal(cols["n"].reshape(-1, k), traj.counts)
    np.testing.assert_array_equal(cols["chosen"].reshape(-1, k)[1:, 0], traj.chosen[1:] + 1)


def test_ode_and_redistribution_csv(tmp_path):
    ode = integrate_ode(uniform_state(3), ModelParams(), t_end=0.1)
    write_trajectory_csv(ode, tmp_path / "o.csv")
    cols = read_trajectory_csv(tmp_path / "o.csv")
    assert np.all(np.isnan(cols["n"])) and np.all(np.isnan(cols["chosen"]))
    red = run_redistribution(SimConfig(k_groups=3, t_steps=3, process="redistribution"))
    write_trajectory_csv(red, tmp_path / "r.csv")
    assert np.all(np.isnan(read_trajectory_csv(tmp_path / "r.csv")["chosen"]))


def test_summary_table_csv_shape(tmp_path):
    table = run_experiment(ExperimentSpec("table_repro", {"process.t_steps": 30}, seeds=[0, 1]))
    path = tmp_path / "s.csv"
    write_summary(table, path, "csv")
    rows = list(csv.reader(path.open()))
    assert len(rows[0]) == 1 + 6
    body = rows[1:11]
    assert all(len(r) == 7 for r in body) and rows[11] == []
    assert [r[0] for r in rows[12:]] == ["statistic", "seed_shown", "n_seeds", "mean_ratio", "mean_max_share", "mean_gini"]


def test_summary_json_has_metadata(tmp_path):
    res = solve_fixed_point(ModelParams(), k=3)
    write_summary(res, tmp_path / "f.json", "json", base_metadata("fixedpoint"))
    doc = json.loads((tmp_path / "f.json").read_text())
    meta = doc["metadata"]
    assert {"tool", "version", "model_version", "rng", "command"} <= set(meta)
    assert "PCG64" in meta["rng"]
    assert doc["payload"]["kind"] == "fixed_point" and doc["payload"]["converged"] is True


def test_complex_eigenvalues_serialized_as_pairs(tmp_path):
    assert to_jsonable(np.array([1 + 2j])) == [[1.0, 2.0]]
    report = stability_report(ModelParams(attraction_mode="reduced"), uniform_state(3))
    write_summary(report, tmp_path / "s.json")
    payload = json.loads((tmp_path / "s.json").read_text())["payload"]
    assert all(len(v) == 2 for v in payload["eigenvalues"])
    assert payload["classification"] == "stable-node"
    write_summary(report, tmp_path / "s.csv", "csv")
    assert "classification,stable-node" in (tmp_path / "s.csv").read_text()


def test_other_summaries(tmp_path):
    write_summary(hessian_degeneracy_report(5), tmp_path / "h.csv", "csv")
    assert "degenerate,true" in (tmp_path / "h.csv").read_text()
    ens = run_ensemble(SimConfig(t_steps=10), 3)
    write_summary(ens, tmp_path / "e.csv", "csv")
    rows = list(csv.reader((tmp_path / "e.csv").open()))
    assert len(rows) == 1 + 3 + 2
    with pytest.raises(ConfigError):
        write_summary(ens, tmp_path / "e.xml", "xml")
    with pytest.raises(ConfigError):
        write_summary(object(), tmp_path / "x.json")
