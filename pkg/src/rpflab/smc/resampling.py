import numpy as np


def _cdf(weights):
    c = np.cumsum(np.asarray(weights, dtype=float))
    c /= c[-1]
    c[-1] = 1.0
    return c


def systematic_resample(weights, rng):
    """Systematic (low-variance) resampling from a single uniform draw.

    Particle ``i`` is selected either ``floor(N w_i)`` or ``ceil(N w_i)``
    times.
    """
    n = len(weights)
    u = (rng.random(1)[0] + np.arange(n)) / n
    return np.minimum(np.searchsorted(_cdf(weights), u, side="right"), n - 1)


def multinomial_resample(weights, rng):
    """``N`` independent categorical draws (one uniform each)."""
    n = len(weights)
    return np.minimum(np.searchsorted(_cdf(weights), rng.random(n), side="right"), n - 1)
