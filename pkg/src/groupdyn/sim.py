"""Sequential-entrant Markov process and the damped redistribution variant."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from .errors import ConfigError, NumericalError
from .model import ModelParams, entry_pipeline, proportions, resolve_bias
from .sampling import make_rng, sample_bias
from .stats import concentration_stats

PROCESSES = ("entrant", "redistribution")


@dataclass(frozen=True)
class SimConfig:
    k_groups: int = 5
    t_steps: int = 1000
    params: ModelParams = field(default_factory=ModelParams)
    init_counts: Optional[tuple] = None
    init_range: tuple = (1, 10)
    seed: int = 0
    process: str = "entrant"
    eta_frac: float = 0.05
    damping: float = 0.1
    record_every: Optional[int] = None

    def __post_init__(self):
        if self.k_groups < 2:
            raise ConfigError("k_groups must be >= 2")
        if self.t_steps < 0:
            raise ConfigError("t_steps must be >= 0")
        if self.process not in PROCESSES:
            raise ConfigError(f"process must be one of {PROCESSES}, got {self.process!r}")
        if self.init_counts is not None:
            counts = tuple(self.init_counts)
            if len(counts) != self.k_groups:
                raise ConfigError(f"init counts have length {len(counts)}, expected {self.k_groups}")
            if any(c < 0 for c in counts) or sum(counts) < 1:
                raise ConfigError("init counts must be >= 0 with a positive total")
            if self.process == "entrant" and any(int(c) != c for c in counts):
                raise ConfigError("entrant process needs integer init counts")
            object.__setattr__(self, "init_counts", counts)
        else:
            lo, hi = self.init_range
            if not 1 <= lo <= hi:
                raise ConfigError(f"init range needs 1 <= lo <= hi, got {self.init_range}")
            object.__setattr__(self, "init_range", (int(lo), int(hi)))
        if not 0 < self.eta_frac < 1:
            raise ConfigError("eta_frac must lie in (0, 1)")
        if not 0 < self.damping <= 1:
            raise ConfigError("damping must lie in (0, 1]")
        if self.record_every is not None and self.record_every < 1:
            raise ConfigError("record_every must be >= 1")
        explicit = self.params.bias.explicit
        if explicit is not None and len(explicit) != self.k_groups:
            raise ConfigError("explicit bias length must equal k_groups")

    @property
    def stride(self) -> int:
        if self.record_every is not None:
            return self.record_every
        return 1 if self.t_steps <= 10_000 else math.ceil(self.t_steps / 10_000)


@dataclass
class Trajectory:
    """Time-indexed record of a run.

    ``counts`` is None for mean-field trajectories and ``chosen`` is None unless
    the run is an entrant process (then -1 marks the initial record).
    """

    process: str
    times: np.ndarray
    counts: Optional[np.ndarray]
    pi: np.ndarray
    theta: np.ndarray
    a: np.ndarray
    p: np.ndarray
    chosen: Optional[np.ndarray] = None
    eps: Optional[np.ndarray] = None
    corrections: Optional[np.ndarray] = None

    @property
    def final_counts(self):
        return None if self.counts is None else self.counts[-1]

    @property
    def final_pi(self):
        return self.pi[-1]

    @property
    def final_p(self):
        return self.p[-1]

    def __len__(self):
        return len(self.times)


class _Recorder:
    def __init__(self):
        self.rows = {k: [] for k in ("times", "counts", "pi", "theta", "a", "p", "chosen")}

    def add(self, t, counts, pi, theta, a, p, chosen):
        r = self.rows
        r["times"].append(t)
        r["counts"].append(counts.copy())
        r["pi"].append(pi)
        r["theta"].append(theta)
        r["a"].append(a)
        r["p"].append(p)
        r["chosen"].append(chosen)

    def build(self, process, eps) -> Trajectory:
        r = self.rows
        return Trajectory(
            process=process,
            times=np.array(r["times"], dtype=np.int64),
            counts=np.array(r["counts"]),
            pi=np.array(r["pi"]),
            theta=np.array(r["theta"]),
            a=np.array(r["a"]),
            p=np.array(r["p"]),
            chosen=np.array(r["chosen"], dtype=np.int64) if process == "entrant" else None,
            eps=None if eps is None else np.array(eps),
        )


def choose_index(p: np.ndarray, u: float) -> int:
    """Inverse-CDF categorical draw over ascending group indices.

    Group k is chosen when ``cumsum(p)[k-1] <= u < cumsum(p)[k]``.
    """
    idx = int(np.searchsorted(np.cumsum(p), u, side="right"))
    if idx >= p.size:
        # u beyond a cumulative sum that rounded below 1
        idx = int(np.flatnonzero(p > 0)[-1])
    return idx


def initial_counts(config: SimConfig, rng: np.random.Generator) -> np.ndarray:
    if config.init_counts is not None:
        dtype = np.int64 if config.process == "entrant" else float
        return np.array(config.init_counts, dtype=dtype)
    lo, hi = config.init_range
    counts = rng.integers(lo, hi + 1, size=config.k_groups)
    return counts if config.process == "entrant" else counts.astype(float)


def step_entrant(counts, params: ModelParams, eps_frozen, rng):
    """Add one entrant. Returns ``(new_counts, chosen, p)``.

    With ``eps_frozen`` None the bias is drawn from ``rng`` first (per_step
    mode semantics), then a single uniform selects the group.
    """
    counts = np.asarray(counts)
    pi = proportions(counts)
    eps = sample_bias(params.bias, counts.size, rng) if eps_frozen is None else eps_frozen
    _, _, p = entry_pipeline(pi, params, eps)
    chosen = choose_index(p, rng.random())
    new = counts.copy()
    new[chosen] += 1
    return new, chosen, p


class EntryProcess:
    """Resumable entrant process.

    Holds the counts, the random stream and the bias in force for the next
    entrant, so ``advance(a)`` followed by ``advance(b)`` reproduces a single
    ``advance(a + b)``.
    """

    def __init__(self, config: SimConfig):
        if config.process != "entrant":
            raise ConfigError("EntryProcess needs process='entrant'")
        self.config = config
        self.params = config.params
        self.rng = make_rng(config.seed)
        self.counts = initial_counts(config, self.rng)
        self.total = int(self.counts.sum())
        self.t = 0
        self.frozen_eps = None
        if self.params.bias.mode == "frozen":
            self.frozen_eps = sample_bias(self.params.bias, config.k_groups, self.rng)
        self._next = self._evaluate()
        self._rec = _Recorder()
        self._maybe_record(-1)

    def _evaluate(self):
        eps = self.frozen_eps
        if eps is None:
            eps = sample_bias(self.params.bias, self.config.k_groups, self.rng)
        pi = self.counts / self.total
        return (pi,) + entry_pipeline(pi, self.params, eps)

    def _maybe_record(self, chosen):
        t = self.t
        if t % self.config.stride == 0 or t == self.config.t_steps:
            self._rec.add(t, self.counts, *self._next, chosen)

    def advance(self, n_steps: int):
        rng = self.rng
        for _ in range(n_steps):
            p = self._next[3]
            k = choose_index(p, rng.random())
            self.counts[k] += 1
            self.total += 1
            self.t += 1
            self._next = self._evaluate()
            self._maybe_record(k)
        return self

    def trajectory(self) -> Trajectory:
        return self._rec.build("entrant", self.frozen_eps)


def run_entry_process(config: SimConfig) -> Trajectory:
    return EntryProcess(config).advance(config.t_steps).trajectory()


def redistribute(n, p, eta_frac: float, damping: float) -> np.ndarray:
    """Entrants ``eta*N`` split by ``p`` plus a damped flow toward ``N*p``."""
    n = np.asarray(n, dtype=float)
    p = np.asarray(p, dtype=float)
    total = n.sum()
    flow = damping * (total * p - n)
    out = n + eta_frac * total * p + flow
    if np.any(out < 0):
        raise NumericalError(f"redistribution produced a negative group size: {out}")
    return out


def step_redistribution(counts, params: ModelParams, eta_frac: float, damping: float, eps=None):
    counts = np.asarray(counts, dtype=float)
    pi = proportions(counts)
    if eps is None:
        eps = resolve_bias(params, counts.size)
    _, _, p = entry_pipeline(pi, params, eps)
    return redistribute(counts, p, eta_frac, damping)


def run_redistribution(config: SimConfig) -> Trajectory:
    if config.process != "redistribution":
        raise ConfigError("run_redistribution needs process='redistribution'")
    params = config.params
    rng = make_rng(config.seed)
    n = initial_counts(config, rng).astype(float)
    k = config.k_groups
    frozen = sample_bias(params.bias, k, rng) if params.bias.mode == "frozen" else None
    rec = _Recorder()
    stride = config.stride
    for t in range(config.t_steps + 1):
        eps = frozen if frozen is not None else sample_bias(params.bias, k, rng)
        pi = n / n.sum()
        theta, a, p = entry_pipeline(pi, params, eps)
        if t % stride == 0 or t == config.t_steps:
            rec.add(t, n, pi, theta, a, p, -1)
        if t < config.t_steps:
            n = redistribute(n, p, config.eta_frac, config.damping)
    return rec.build("redistribution", frozen)


def run_simulation(config: SimConfig) -> Trajectory:
    if config.process == "entrant":
        return run_entry_process(config)
    return run_redistribution(config)


@dataclass
class EnsembleSummary:
    seeds: List[int]
    final_counts: np.ndarray
    final_pi: np.ndarray
    mean_pi: np.ndarray
    std_pi: np.ndarray
    stats: List[dict]

    @property
    def n_runs(self) -> int:
        return len(self.seeds)


def _final_of(config: SimConfig):
    traj = run_simulation(config)
    return traj.final_counts, traj.final_pi


def run_ensemble(config: SimConfig, n_runs: int, base_seed: int = 0, n_jobs: int = 1) -> EnsembleSummary:
    """Independent replicas with seeds ``base_seed + 0 .. n_runs - 1``.

    ``n_jobs > 1`` runs replicas in worker processes; results are merged in
    seed order and match serial execution exactly.
    """
    if n_runs < 1:
        raise ConfigError("n_runs must be >= 1")
    seeds = [base_seed + i for i in range(n_runs)]
    configs = [replace(config, seed=s) for s in seeds]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            finals = list(pool.map(_final_of, configs))
    else:
        finals = [_final_of(c) for c in configs]
    counts = np.array([f[0] for f in finals])
    pis = np.array([f[1] for f in finals])
    return EnsembleSummary(
        seeds=seeds,
        final_counts=counts,
        final_pi=pis,
        mean_pi=pis.mean(axis=0),
        std_pi=pis.std(axis=0),
        stats=[concentration_stats(c) for c in counts],
    )


def drift_estimate(counts, params: ModelParams, n_samples: int, rng, eps=None, with_stderr: bool = False):
    """Monte Carlo estimate of ``E[pi(t+1) - pi(t)]`` from one state.

    ``eps`` defaults to the deterministic bias of ``params`` (explicit vector
    or symmetric ``mu``); in per_step mode a fresh bias is drawn per sample.
    """
    if n_samples < 1:
        raise ConfigError("n_samples must be >= 1")
    counts = np.asarray(counts)
    pi = proportions(counts)
    k = counts.size
    step = 1.0 / (counts.sum() + 1)
    if params.bias.mode == "per_step" and eps is None:
        chosen = np.array([step_entrant(counts, params, None, rng)[1] for _ in range(n_samples)])
    else:
        if eps is None:
            eps = resolve_bias(params, k)
        _, _, p = entry_pipeline(pi, params, eps)
        cdf = np.cumsum(p)
        chosen = np.searchsorted(cdf, rng.random(n_samples), side="right")
        chosen = np.minimum(chosen, np.flatnonzero(p > 0)[-1])
    hits = np.zeros((n_samples, k))
    hits[np.arange(n_samples), chosen] = 1.0
    deltas = (hits - pi) * step
    mean = deltas.mean(axis=0)
    if not with_stderr:
        return mean
    se = deltas.std(axis=0, ddof=1) / math.sqrt(n_samples) if n_samples > 1 else np.full(k, np.inf)
    return mean, se
