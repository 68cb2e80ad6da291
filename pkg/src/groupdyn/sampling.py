"""Random streams and truncated-normal bias draws."""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError, EmptySupportError

RNG_ALGORITHM = "numpy.random.PCG64 seeded via numpy.random.SeedSequence"


def make_rng(seed: int) -> np.random.Generator:
    if seed < 0 or seed >= 2**64:
        raise ConfigError(f"seed must fit in an unsigned 64-bit integer, got {seed}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def _robert_tail(a: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` standard normals conditioned on ``z >= a`` for ``a > 0``.

    Exponential proposal with the optimal rate (Robert 1995).
    """
    alpha = 0.5 * (a + math.sqrt(a * a + 4.0))
    out = np.empty(n)
    todo = np.arange(n)
    while todo.size:
        z = a + rng.exponential(1.0 / alpha, size=todo.size)
        ok = rng.random(todo.size) <= np.exp(-0.5 * (z - alpha) ** 2)
        out[todo[ok]] = z[ok]
        todo = todo[~ok]
    return out


def truncated_normal(mu: float, sigma: float, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """``size`` draws from N(mu, sigma^2) conditioned on ``[0, inf)``.

    Plain rejection from the untruncated normal when ``mu >= 0`` (acceptance
    rate at least one half); Robert's exponential tail sampler otherwise.
    """
    if not sigma >= 0:
        raise ConfigError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        if mu < 0:
            raise EmptySupportError(f"N({mu}, 0) has no mass on [0, inf)")
        return np.full(size, float(mu))
    if mu < 0:
        # rounding can push mu + sigma*z a hair below zero
        return np.maximum(mu + sigma * _robert_tail(-mu / sigma, size, rng), 0.0)
    out = mu + sigma * rng.standard_normal(size)
    bad = np.flatnonzero(out < 0)
    while bad.size:
        redraw = mu + sigma * rng.standard_normal(bad.size)
        out[bad] = redraw
        bad = bad[redraw < 0]
    return out


def sample_truncated_normal(mu: float, sigma: float, rng: np.random.Generator) -> float:
    return float(truncated_normal(mu, sigma, rng, 1)[0])


def sample_bias(bias, k: int, rng: np.random.Generator) -> np.ndarray:
    """Bias vector for one run (frozen) or one step (per_step)."""
    if bias.explicit is not None:
        eps = np.asarray(bias.explicit, dtype=float)
        if eps.size != k:
            raise ConfigError(f"explicit bias has length {eps.size}, expected K={k}")
        return eps.copy()
    return truncated_normal(bias.mu, bias.sigma, rng, k)
