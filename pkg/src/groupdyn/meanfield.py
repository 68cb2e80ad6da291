"""Deterministic limit dynamics ``dpi/dt = p(pi) - pi``.

Fixed points of the probability map, RK4 integration on the simplex and the
first-order expansion of asymmetric equilibria around the uniform state.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, DegenerateExpansionError, InstabilityError
from .model import (
    BiasSpec,
    ModelParams,
    check_simplex,
    entry_pipeline,
    probability_map,
    resolve_bias,
    uniform_state,
)
from .sim import Trajectory

log = logging.getLogger(__name__)

CORRECTION_WARN = 1e-6


def normalize_simplex(pi) -> tuple:
    """Clamp negatives to zero and rescale. Returns ``(state, correction)``."""
    raw = np.asarray(pi, dtype=float)
    out = np.maximum(raw, 0.0)
    out = out / out.sum()
    return out, float(np.abs(out - raw).max())


def _bias(params, k, eps):
    return resolve_bias(params, k) if eps is None else np.asarray(eps, dtype=float)


def drift(pi, params: ModelParams, eps=None) -> np.ndarray:
    pi = np.asarray(pi, dtype=float)
    return probability_map(pi, params, _bias(params, pi.size, eps)) - pi


def integrate_ode(
    state0,
    params: ModelParams,
    dt: float = 0.01,
    t_end: float = 50.0,
    eps=None,
    record_every: int = 1,
) -> Trajectory:
    """Fixed-step classical RK4 with renormalization after every step.

    The step is adjusted to ``t_end / round(t_end / dt)`` so the horizon is hit
    exactly.
    """
    if not dt > 0 or not t_end >= 0:
        raise ConfigError("need dt > 0 and t_end >= 0")
    pi = check_simplex(state0, tol=1e-9)
    eps = _bias(params, pi.size, eps)
    n_steps = int(round(t_end / dt))
    h = t_end / n_steps if n_steps else dt

    def f(x):
        return probability_map(x, params, eps) - x

    times, states, corrections = [0.0], [pi], [0.0]
    lo, hi = -10 * h, 1 + 10 * h
    for i in range(1, n_steps + 1):
        k1 = f(pi)
        k2 = f(pi + 0.5 * h * k1)
        k3 = f(pi + 0.5 * h * k2)
        k4 = f(pi + h * k3)
        raw = pi + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if np.any(raw < lo) or np.any(raw > hi):
            raise InstabilityError(f"state left the simplex neighbourhood at t={i * h:.6g}: {raw}")
        pi, corr = normalize_simplex(raw)
        if corr > CORRECTION_WARN:
            log.warning("simplex correction %.3g at t=%.6g", corr, i * h)
        if i % record_every == 0 or i == n_steps:
            times.append(i * h)
            states.append(pi)
            corrections.append(corr)
    pis = np.array(states)
    pipes = [entry_pipeline(x, params, eps) for x in pis]
    return Trajectory(
        process="ode",
        times=np.array(times),
        counts=None,
        pi=pis,
        theta=np.array([q[0] for q in pipes]),
        a=np.array([q[1] for q in pipes]),
        p=np.array([q[2] for q in pipes]),
        eps=eps,
        corrections=np.array(corrections),
    )


@dataclass
class FixedPointResult:
    pi_star: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool
    tol: float = 1e-12


def solve_fixed_point(
    params: ModelParams,
    initial=None,
    k: Optional[int] = None,
    relax: float = 0.5,
    tol: float = 1e-12,
    max_iter: int = 100_000,
    eps=None,
) -> FixedPointResult:
    """Damped self-map iteration ``pi <- normalize((1 - relax) pi + relax p(pi))``.

    Starts from the uniform state when ``initial`` is None. On failure the
    best iterate seen is returned with ``converged=False``.
    """
    if not 0 < relax <= 1:
        raise ConfigError("relax must lie in (0, 1]")
    if not tol > 0:
        raise ConfigError("tol must be > 0")
    if initial is None:
        if k is None:
            raise ConfigError("give either an initial state or k")
        pi = uniform_state(k)
    else:
        pi, _ = normalize_simplex(initial)
    eps = _bias(params, pi.size, eps)

    best_pi, best_res = pi, np.inf
    it = 0
    while True:
        p = probability_map(pi, params, eps)
        res = float(np.abs(p - pi).max())
        if res < best_res:
            best_pi, best_res = pi, res
        if res <= tol:
            return FixedPointResult(pi, res, it, True, tol)
        if it >= max_iter:
            log.warning("fixed-point iteration stopped at max_iter=%d, residual %.3g", max_iter, best_res)
            return FixedPointResult(best_pi, best_res, it, False, tol)
        pi, _ = normalize_simplex((1 - relax) * pi + relax * p)
        it += 1


@dataclass(frozen=True)
class PerturbationInput:
    theta: float
    beta: float
    eps_base: float
    eta_perturb: tuple

    def __post_init__(self):
        eta = tuple(float(v) for v in self.eta_perturb)
        if len(eta) < 2:
            raise ConfigError("need K >= 2 perturbations")
        if abs(sum(eta)) > 1e-12:
            raise ConfigError(f"bias perturbations must sum to zero, got {sum(eta)!r}")
        if not self.theta > 0:
            raise ConfigError("theta must be > 0")
        object.__setattr__(self, "eta_perturb", eta)

    @property
    def k_groups(self) -> int:
        return len(self.eta_perturb)

    def bias_vector(self) -> np.ndarray:
        return self.eps_base + np.asarray(self.eta_perturb)

    def reduced_params(self) -> ModelParams:
        return ModelParams(
            beta=self.beta,
            attraction_mode="reduced",
            theta_scalar=self.theta,
            bias=BiasSpec(explicit=tuple(self.bias_vector())),
        )


def first_order_equilibrium(inp: PerturbationInput) -> np.ndarray:
    """``1/K + eta_k / (theta K^(beta+1) (1+beta) + K eps)``."""
    k = inp.k_groups
    denom = inp.theta * k ** (inp.beta + 1) * (1 + inp.beta) + k * inp.eps_base
    if denom == 0:
        raise DegenerateExpansionError("first-order denominator vanishes")
    return 1.0 / k + np.asarray(inp.eta_perturb) / denom


def compare_first_order(inp: PerturbationInput, tol: float = 1e-13) -> dict:
    """First-order equilibrium against the numerically solved reduced model."""
    approx = first_order_equilibrium(inp)
    numeric = solve_fixed_point(inp.reduced_params(), k=inp.k_groups, tol=tol)
    return {
        "approx": approx,
        "numeric": numeric,
        "max_abs_error": float(np.abs(approx - numeric.pi_star).max()),
    }
