"""Gaussian corruption of network inputs, used in both training and testing
for the robustness protocol."""

from __future__ import annotations

import numpy as np


def add_gaussian_noise(values, variance, seed):
    """Add i.i.d. zero-mean Gaussian noise with the given variance.

    Variance 0 returns the input object unchanged (bit-identical, no RNG
    draw). ``seed`` may be an int or tuple; identical seeds give identical
    noise.
    """
    if variance < 0:
        raise ValueError(f"variance must be non-negative, got {variance}")
    if variance == 0:
        return values
    rng = np.random.default_rng(seed)
    arr = np.asarray(values, dtype=np.float64)
    return arr + rng.normal(0.0, np.sqrt(variance), size=arr.shape)
