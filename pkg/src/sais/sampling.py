"""Poisson sampling pinned to an explicit uniform stream.

Only uniform draws are taken from the numpy Generator, so a fixed seed
reproduces the same counts across numpy versions. Small means use
inversion by sequential search; large means use Hormann's transformed
rejection (PTRS).
"""

from __future__ import annotations

import math

import numpy as np

_SMALL_MEAN_LIMIT = 50.0


def _poisson_small(mean: float, rng: np.random.Generator) -> int:
    # inversion: walk the cdf until it passes a single uniform
    u = rng.random()
    p = math.exp(-mean)
    cdf = p
    k = 0
    while u > cdf:
        k += 1
        p *= mean / k
        cdf += p
        if k > 10_000_000:  # unreachable for mean < 50; inf/nan guard
            raise RuntimeError("poisson inversion failed to terminate")
    return k


def _poisson_ptrs(mean: float, rng: np.random.Generator) -> int:
    b = 0.931 + 2.53 * math.sqrt(mean)
    a = -0.059 + 0.02483 * b
    inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
    v_r = 0.9277 - 3.6224 / (b - 2.0)
    log_mean = math.log(mean)
    while True:
        u = rng.random() - 0.5
        v = rng.random()
        us = 0.5 - abs(u)
        k = math.floor((2.0 * a / us + b) * u + mean + 0.43)
        if us >= 0.07 and v <= v_r:
            return int(k)
        if k < 0 or (us < 0.013 and v > us):
            continue
        if (math.log(v * inv_alpha / (a / (us * us) + b))
                <= k * log_mean - mean - math.lgamma(k + 1.0)):
            return int(k)


def poisson_sample(means: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw one Poisson count per entry of ``means``.

    Means must be finite and nonnegative. A zero mean always yields a
    zero count (it still consumes one uniform, like any small mean).
    Counts are returned as float64 for direct use in the residuals.
    """
    means = np.asarray(means, dtype=np.float64)
    if means.ndim != 1:
        raise ValueError("means must be a 1-d array")
    if not np.all(np.isfinite(means)) or np.any(means < 0.0):
        raise ValueError("means must be finite and nonnegative")
    out = np.empty(means.shape[0], dtype=np.float64)
    for idx in range(means.shape[0]):
        mu = means[idx]
        if mu < _SMALL_MEAN_LIMIT:
            out[idx] = _poisson_small(mu, rng)
        else:
            out[idx] = _poisson_ptrs(mu, rng)
    return out
