"""Stateless evaluation of the group-formation model.

Group counts and simplex states are plain 1-D numpy arrays; the functions here
take and return arrays and never mutate their inputs.

The entry pipeline is::

    counts -> proportions -> attraction matrix -> cumulative attraction
           -> attraction potential -> choice probabilities

with the reduced variant replacing the state-dependent cumulative attraction
by a constant scalar.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import (
    ConfigError,
    DegenerateAttractionError,
    DomainError,
    EmptyPopulationError,
)

DEFAULT_SMOOTHING = 1e-12
DEFAULT_FLOOR = 1e-9
SIMPLEX_TOL = 1e-12

BIAS_MODES = ("frozen", "per_step")
ATTRACTION_MODES = ("full", "reduced")


@dataclass(frozen=True)
class BiasSpec:
    """Additive group bias: truncated-normal draws or an explicit vector."""

    mode: str = "frozen"
    mu: float = 0.1
    sigma: float = 0.05
    explicit: Optional[tuple] = None

    def __post_init__(self):
        if self.mode not in BIAS_MODES:
            raise ConfigError(f"bias.mode must be one of {BIAS_MODES}, got {self.mode!r}")
        if not self.sigma >= 0:
            raise ConfigError(f"bias.sigma must be >= 0, got {self.sigma}")
        if self.explicit is not None:
            vals = tuple(float(v) for v in self.explicit)
            if any(not v >= 0 for v in vals):
                raise ConfigError("explicit bias values must all be >= 0")
            object.__setattr__(self, "explicit", vals)


@dataclass(frozen=True)
class ModelParams:
    beta: float = 0.5
    attraction_mode: str = "full"
    theta_scalar: float = 1.0
    bias: BiasSpec = field(default_factory=BiasSpec)
    smoothing: float = DEFAULT_SMOOTHING
    floor: float = DEFAULT_FLOOR

    def __post_init__(self):
        if self.attraction_mode not in ATTRACTION_MODES:
            raise ConfigError(
                f"attraction_mode must be one of {ATTRACTION_MODES}, got {self.attraction_mode!r}"
            )
        if not self.smoothing > 0:
            raise ConfigError("smoothing must be > 0")
        if not self.floor > 0:
            raise ConfigError("floor must be > 0")
        if self.attraction_mode == "reduced" and not self.theta_scalar > 0:
            raise ConfigError("theta_scalar must be > 0 in reduced mode")

    def with_bias(self, **changes) -> "ModelParams":
        return replace(self, bias=replace(self.bias, **changes))


def check_simplex(pi, tol: float = SIMPLEX_TOL) -> np.ndarray:
    pi = np.asarray(pi, dtype=float)
    if pi.ndim != 1 or pi.size < 2:
        raise DomainError("a simplex state needs K >= 2 entries")
    if np.any(pi < 0) or abs(pi.sum() - 1.0) > tol:
        raise DomainError(f"state is not on the simplex (sum={pi.sum()!r}, min={pi.min()!r})")
    return pi


def resolve_bias(params: ModelParams, k: int) -> np.ndarray:
    """Deterministic bias vector for analytical work.

    Uses the explicit vector when given, otherwise the symmetric value ``mu``.
    """
    if params.bias.explicit is not None:
        eps = np.asarray(params.bias.explicit, dtype=float)
        if eps.size != k:
            raise ConfigError(f"explicit bias has length {eps.size}, expected K={k}")
        return eps
    if params.bias.mu < 0:
        raise ConfigError("symmetric bias needs mu >= 0")
    return np.full(k, float(params.bias.mu))


def proportions(counts) -> np.ndarray:
    counts = np.asarray(counts, dtype=float)
    if counts.ndim != 1 or counts.size < 2:
        raise DomainError("need K >= 2 group counts")
    if np.any(counts < 0):
        raise DomainError("group counts must be nonnegative")
    total = counts.sum()
    if total <= 0:
        raise EmptyPopulationError("total population is zero; proportions undefined")
    return counts / total


def mutual_attraction(x, y, smoothing: float = DEFAULT_SMOOTHING):
    """Smoothed pairwise attraction ``(x^2 + y^2 - xy) / (max(x, y) + smoothing)``.

    Works elementwise on arrays. In the ``smoothing -> 0`` limit it returns 0 for
    two empty groups and the other group's share when exactly one is empty.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = (x * x + y * y - x * y) / (np.maximum(x, y) + smoothing)
    return out[()] if out.ndim == 0 else out


def attraction_matrix(pi, smoothing: float = DEFAULT_SMOOTHING) -> np.ndarray:
    pi = np.asarray(pi, dtype=float)
    x = pi[:, None]
    y = pi[None, :]
    return (x * x + y * y - x * y) / (np.maximum(x, y) + smoothing)


def cumulative_attraction(m) -> np.ndarray:
    # row sums include the self term m[k, k]
    return np.asarray(m, dtype=float).sum(axis=1)


def attraction_potential(theta, pi, beta: float, floor: float = DEFAULT_FLOOR) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if beta == 0:
        return theta.copy()
    pi = np.asarray(pi, dtype=float)
    return theta * np.maximum(pi, floor) ** (-beta)


def choice_probabilities(a, eps) -> np.ndarray:
    w = np.asarray(a, dtype=float) + np.asarray(eps, dtype=float)
    total = w.sum()
    if not total > 0:
        raise DegenerateAttractionError("attraction plus bias sums to zero; no group can be chosen")
    return w / total


def reduced_choice_probabilities(
    pi, theta: float, beta: float, eps, floor: float = DEFAULT_FLOOR
) -> np.ndarray:
    pi = np.asarray(pi, dtype=float)
    a = theta * np.maximum(pi, floor) ** (-beta)
    return choice_probabilities(a, eps)


def entry_pipeline(pi, params: ModelParams, eps):
    """Return ``(theta, a, p)`` at state ``pi`` for the configured attraction mode.

    In reduced mode ``theta`` is the constant scalar broadcast to length K.
    """
    pi = np.asarray(pi, dtype=float)
    if params.attraction_mode == "full":
        theta = attraction_matrix(pi, params.smoothing).sum(axis=1)
    else:
        theta = np.full(pi.shape, params.theta_scalar)
    a = attraction_potential(theta, pi, params.beta, params.floor)
    return theta, a, choice_probabilities(a, eps)


def probability_map(pi, params: ModelParams, eps) -> np.ndarray:
    """The map ``pi -> p(pi)`` whose fixed points are the equilibria."""
    return entry_pipeline(pi, params, eps)[2]


# Closed-form derivatives of M(x, y) = x^2/y - x + y on the branch x <= y.

def _check_branch(x: float, y: float):
    if y <= 0:
        raise DomainError(f"y must be positive, got {y}")
    if x < 0 or x > y * (1 + 1e-12):
        raise DomainError(f"closed form requires 0 <= x <= y, got x={x}, y={y}")


def reduced_M(x: float, y: float) -> float:
    return x * x / y - x + y


def gradient_of_M(x: float, y: float) -> np.ndarray:
    _check_branch(x, y)
    return np.array([2 * x / y - 1.0, 1.0 - x * x / (y * y)])


def hessian_of_M(x: float, y: float) -> np.ndarray:
    _check_branch(x, y)
    off = -2 * x / y**2
    return np.array([[2 / y, off], [off, 2 * x * x / y**3]])


def hessian_of_M_grid(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Stack of Hessians with shape ``x.shape + (2, 2)`` for points with ``0 < x <= y``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0) or np.any(x <= 0) or np.any(x > y):
        raise DomainError("grid points must satisfy 0 < x <= y")
    h = np.empty(x.shape + (2, 2))
    h[..., 0, 0] = 2 / y
    h[..., 0, 1] = h[..., 1, 0] = -2 * x / y**2
    h[..., 1, 1] = 2 * x * x / y**3
    return h


def uniform_state(k: int) -> np.ndarray:
    if k < 2:
        raise DomainError("need K >= 2")
    return np.full(k, 1.0 / k)


def as_counts(values: Sequence[float]) -> np.ndarray:
    counts = np.asarray(values)
    if counts.ndim != 1 or counts.size < 2:
        raise DomainError("need K >= 2 group counts")
    if np.any(counts < 0):
        raise DomainError("group counts must be nonnegative")
    return counts
