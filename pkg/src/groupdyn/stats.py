"""Inequality summaries of final group sizes."""

import numpy as np

from .errors import DomainError


def concentration_stats(final_counts) -> dict:
    """Max/min ratio (min floored at 1), largest share and Gini coefficient.

    Gini is the mean absolute difference over all ordered pairs divided by
    twice the mean.
    """
    x = np.asarray(final_counts, dtype=float)
    if x.ndim != 1 or x.size == 0 or np.any(x < 0) or x.sum() <= 0:
        raise DomainError("need a nonempty, nonnegative vector with positive total")
    mad = np.abs(x[:, None] - x[None, :]).mean()
    return {
        "ratio": float(x.max() / max(x.min(), 1.0)),
        "max_share": float(x.max() / x.sum()),
        "gini": float(mad / (2 * x.mean())),
    }
