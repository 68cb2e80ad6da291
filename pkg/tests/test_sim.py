from dataclasses import replace

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from groupdyn.errors import ConfigError
from groupdyn.model import BiasSpec, ModelParams, entry_pipeline, proportions
from groupdyn.sampling import make_rng
from groupdyn.sim import (
    EntryProcess,
    SimConfig,
    choose_index,
    drift_estimate,
    redistribute,
    run_ensemble,
    run_entry_process,
    run_redistribution,
    run_simulation,
    step_entrant,
    step_redistribution,
)

ZERO_BIAS = BiasSpec(explicit=(0.0, 0.0))


class FixedUniform:
    """Stand-in random stream returning a constant uniform."""

    def __init__(self, u):
        self.u = u

    def random(self, size=None):
        return self.u if size is None else np.full(size, self.u)


def test_step_entrant_worked_example():
    params = ModelParams(beta=0.0, bias=ZERO_BIAS)
    new, chosen, p = step_entrant(np.array([3, 1]), params, np.zeros(2), FixedUniform(0.7))
    np.testing.assert_allclose(p, [8 / 13, 5 / 13], atol=1e-11)
    assert chosen == 1
    np.testing.assert_array_equal(new, [3, 2])


def test_step_entrant_symmetric():
    params = ModelParams(beta=0.5)
    _, chosen, p = step_entrant(np.array([5, 5]), params, np.full(2, 0.1), FixedUniform(0.49))
    np.testing.assert_allclose(p, 0.5)
    assert chosen == 0


def test_empty_group_keeps_positive_probability():
    params = ModelParams(beta=0.0, bias=ZERO_BIAS)
    theta, _, p = entry_pipeline(proportions([1, 0]), params, np.zeros(2))
    np.testing.assert_allclose(theta, [2, 1], atol=1e-11)
    np.testing.assert_allclose(p, [2 / 3, 1 / 3], atol=1e-11)


@pytest.mark.parametrize("u,expected", [(0.0, 0), (0.1999, 0), (0.2, 1), (0.4999, 1), (0.5, 2), (0.999999, 2)])
def test_choose_index_boundaries(u, expected):
    # cumsum (0.2, 0.5, 1.0): group k when cdf[k-1] <= u < cdf[k]
    assert choose_index(np.array([0.2, 0.3, 0.5]), u) == expected


def test_choose_index_rounded_cdf():
    p = np.array([0.5, 0.5 - 1e-16, 0.0])
    assert choose_index(p, 1 - 1e-17) == 1


def test_zero_steps_keeps_initial_state():
    traj = run_entry_process(SimConfig(k_groups=3, t_steps=0, init_counts=(2, 3, 4)))
    assert len(traj) == 1
    np.testing.assert_array_equal(traj.counts[0], [2, 3, 4])
    assert traj.chosen[0] == -1


def test_one_step_adds_one_member():
    traj = run_entry_process(SimConfig(k_groups=2, t_steps=1, init_counts=(1, 1)))
    assert traj.final_counts.sum() == 3


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32), st.floats(-1.5, 2.0), st.integers(2, 8))
def test_run_invariants(seed, beta, k):
    cfg = SimConfig(k_groups=k, t_steps=200, params=ModelParams(beta=beta), seed=seed)
    traj = run_entry_process(cfg)
    n0 = traj.counts[0].sum()
    np.testing.assert_array_equal(traj.counts.sum(axis=1), n0 + traj.times)
    assert np.all(np.abs(traj.pi.sum(axis=1) - 1) <= 1e-12) and np.all(traj.pi >= 0)
    assert np.all(np.abs(traj.p.sum(axis=1) - 1) <= 1e-12) and np.all(traj.p > 0)
    # incremental identity for consecutive records
    for r in range(1, len(traj)):
        hit = np.zeros(k)
        hit[traj.chosen[r]] = 1
        n_prev = traj.counts[r - 1].sum()
        expected = (n_prev * traj.pi[r - 1] + hit) / (n_prev + 1)
        np.testing.assert_allclose(traj.pi[r], expected, atol=1e-15)


def test_per_step_bias_mode_runs():
    params = ModelParams(beta=0.5, bias=BiasSpec(mode="per_step"))
    traj = run_entry_process(SimConfig(t_steps=50, params=params))
    assert traj.eps is None
    assert traj.final_counts.sum() == traj.counts[0].sum() + 50


def test_split_run_matches_continuous():
    cfg = SimConfig(k_groups=4, t_steps=300, seed=9, params=ModelParams(beta=-0.3, bias=BiasSpec(mode="per_step")))
    whole = run_entry_process(cfg)
    proc = EntryProcess(cfg)
    proc.advance(123)
    proc.advance(177)
    split = proc.trajectory()
    for name in ("times", "counts", "pi", "theta", "a", "p", "chosen"):
        np.testing.assert_array_equal(getattr(whole, name), getattr(split, name))


def test_determinism():
    cfg = SimConfig(k_groups=6, t_steps=500, seed=3)
    a, b = run_entry_process(cfg), run_entry_process(cfg)
    np.testing.assert_array_equal(a.counts, b.counts)
    np.testing.assert_array_equal(a.p, b.p)


def test_same_seed_same_initial_counts_across_beta():
    inits = {run_entry_process(SimConfig(t_steps=5, seed=11, params=ModelParams(beta=b))).counts[0].tobytes()
             for b in (-1.0, 0.0, 2.0)}
    assert len(inits) == 1


def test_record_stride():
    cfg = SimConfig(k_groups=2, t_steps=25_000, init_counts=(1, 1))
    assert cfg.stride == 3
    traj = run_entry_process(cfg)
    assert traj.times[-1] == 25_000 and traj.times[1] == 3
    assert SimConfig(t_steps=10_000).stride == 1


def test_config_validation():
    with pytest.raises(ConfigError):
        SimConfig(k_groups=1)
    with pytest.raises(ConfigError):
        SimConfig(k_groups=2, init_counts=(0, 0))
    with pytest.raises(ConfigError):
        SimConfig(k_groups=2, init_counts=(1.5, 2))
    with pytest.raises(ConfigError):
        SimConfig(t_steps=-1)
    with pytest.raises(ConfigError):
        SimConfig(process="other")


def test_step_size_schedule_conditions():
    t, n0 = sympy.symbols("t n0", positive=True, integer=True)
    gamma = 1 / (n0 + t + 1)
    assert sympy.summation(gamma, (t, 0, sympy.oo)) == sympy.oo
    assert sympy.summation(gamma.subs(n0, 10) ** 2, (t, 0, sympy.oo)).is_finite


# redistribution

def test_redistribute_worked_example():
    np.testing.assert_allclose(redistribute([50, 50], [0.6, 0.4], 0.1, 0.5), [61, 49])


@given(st.lists(st.floats(0.1, 100), min_size=2, max_size=10), st.floats(0.01, 0.5), st.floats(0.01, 1))
def test_redistribute_at_desired_mix_is_pure_growth(n, eta, damping):
    n = np.array(n)
    np.testing.assert_allclose(redistribute(n, n / n.sum(), eta, damping), (1 + eta) * n, rtol=1e-12)


def test_redistribute_without_damping():
    n, p = np.array([30.0, 70.0]), np.array([0.5, 0.5])
    np.testing.assert_allclose(redistribute(n, p, 0.2, 0.0), n + 0.2 * 100 * p)


def test_redistribution_growth_identity():
    cfg = SimConfig(k_groups=4, t_steps=10, init_counts=(10.0, 20.0, 30.0, 40.0), process="redistribution", eta_frac=0.05)
    traj = run_redistribution(cfg)
    assert traj.final_counts.sum() == pytest.approx(100 * 1.05**10, rel=1e-12)
    assert traj.final_counts.sum() == pytest.approx(162.889, abs=1e-3)


def test_redistribution_symmetric_stays_uniform():
    cfg = SimConfig(k_groups=5, t_steps=100, init_counts=(4.0,) * 5, process="redistribution",
                    params=ModelParams(beta=0.5, bias=BiasSpec(explicit=(0.1,) * 5)))
    traj = run_redistribution(cfg)
    np.testing.assert_allclose(traj.pi, 0.2, atol=1e-15)


def test_redistribution_moves_toward_uniform():
    cfg = SimConfig(k_groups=10, t_steps=200, init_counts=tuple(float(c) for c in range(1, 11)),
                    process="redistribution", params=ModelParams(beta=0.5, bias=BiasSpec(explicit=(0.1,) * 10)))
    dev = np.abs(run_redistribution(cfg).pi - 0.1).max(axis=1)
    assert np.all(np.diff(dev) <= 1e-15)
    assert dev[-1] < 0.1 * dev[0]


def test_redistribution_deterministic():
    cfg = SimConfig(k_groups=6, t_steps=50, process="redistribution", seed=5)
    np.testing.assert_array_equal(run_simulation(cfg).counts, run_simulation(cfg).counts)


def test_step_redistribution_uses_symmetric_default_bias():
    out = step_redistribution([50.0, 50.0], ModelParams(), 0.1, 0.5)
    np.testing.assert_allclose(out, [55, 55])


# ensembles

def test_single_run_ensemble_matches_run():
    cfg = SimConfig(t_steps=100, seed=4)
    summary = run_ensemble(cfg, 1, base_seed=4)
    np.testing.assert_array_equal(summary.final_counts[0], run_entry_process(cfg).final_counts)
    np.testing.assert_array_equal(summary.std_pi, 0)


def test_ensemble_repeatable_and_parallel_identical():
    cfg = SimConfig(t_steps=200)
    a = run_ensemble(cfg, 4, base_seed=10)
    b = run_ensemble(cfg, 4, base_seed=10, n_jobs=2)
    assert a.seeds == [10, 11, 12, 13]
    np.testing.assert_array_equal(a.final_counts, b.final_counts)
    np.testing.assert_array_equal(a.mean_pi, b.mean_pi)


def test_ensemble_symmetric_mean_near_uniform():
    cfg = SimConfig(k_groups=5, t_steps=2000, init_counts=(10,) * 5,
                    params=ModelParams(beta=0.5, bias=BiasSpec(explicit=(0.1,) * 5)))
    summary = run_ensemble(cfg, 20)
    assert np.abs(summary.mean_pi - 0.2).max() < 0.05


# drift

def test_drift_worked_example():
    params = ModelParams(beta=0.0, bias=ZERO_BIAS)
    mean, se = drift_estimate(np.array([3, 1]), params, 100_000, make_rng(0), with_stderr=True)
    expected = (8 / 13 - 0.75) / 5
    assert expected == pytest.approx(-0.026923, abs=1e-6)
    assert abs(mean[0] - expected) <= 3 * se[0]


def test_drift_zero_at_fixed_point():
    mean, se = drift_estimate(np.array([10] * 4), ModelParams(), 50_000, make_rng(1), with_stderr=True)
    assert np.all(np.abs(mean) <= 3 * se)


def test_single_sample_drift():
    counts = np.array([3, 1])
    pi = counts / 4
    d = drift_estimate(counts, ModelParams(beta=0.0, bias=ZERO_BIAS), 1, make_rng(2))
    allowed = [((1 - pi[k]) / 5, -pi[k] / 5) for k in range(2)]
    assert all(any(np.isclose(d[k], v, atol=1e-15) for v in allowed[k]) for k in range(2))
    assert abs(d.sum()) < 1e-15


def test_drift_per_step_mode():
    params = ModelParams(bias=BiasSpec(mode="per_step", mu=0.1, sigma=0.05))
    mean = drift_estimate(np.array([5, 5]), params, 2000, make_rng(3))
    assert abs(mean.sum()) < 1e-12
