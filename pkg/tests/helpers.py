"""Shared test fixtures: signal generators and an independent edit-distance
oracle."""

import sys
from functools import lru_cache

import numpy as np


def oracle_edit_distance(ref, hyp) -> int:
    """Plain recursive minimal-edit-distance definition, memoized.

    Intentionally written differently from the library implementation so the
    two can check each other.
    """
    ref = tuple(ref)
    hyp = tuple(hyp)

    @lru_cache(maxsize=None)
    def d(i: int, j: int) -> int:
        if i == 0:
            return j
        if j == 0:
            return i
        return min(
            d(i - 1, j - 1) + (ref[i - 1] != hyp[j - 1]),
            d(i - 1, j) + 1,
            d(i, j - 1) + 1,
        )

    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, len(ref) * len(hyp) + 1000))
    try:
        return d(len(ref), len(hyp))
    finally:
        sys.setrecursionlimit(old_limit)


def speech_like_host(rng: np.random.Generator, n_samples: int,
                     sample_rate: int = 22050) -> np.ndarray:
    """A low-frequency, amplitude-modulated multi-tone signal.

    Energy is concentrated below ~1.2 kHz the way voiced speech is, with a
    small white-noise floor, normalized to RMS 0.1.
    """
    t = np.arange(n_samples) / sample_rate
    x = np.zeros(n_samples)
    for _ in range(rng.integers(3, 8)):
        freq = rng.uniform(80.0, 1200.0)
        phase = rng.uniform(0, 2 * np.pi)
        mod_rate = rng.uniform(1.0, 6.0)
        envelope = 0.6 + 0.4 * np.sin(2 * np.pi * mod_rate * t + rng.uniform(0, 2 * np.pi))
        x += envelope * np.sin(2 * np.pi * freq * t + phase)
    x += 0.05 * np.std(x) * rng.standard_normal(n_samples)
    return 0.1 * x / np.sqrt(np.mean(np.square(x)))
