"""Seeded random streams and the timer distributions used by the simulators.

Every stream is a PCG64 generator seeded through numpy's ``SeedSequence``
from ``(master_seed, *key)``.  The key is usually a trial index, so a trial's
draws never depend on which other trials ran before it or on which worker
ran it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1


class RandomSource:
    """Single-owner uniform stream derived from a master seed and a key."""

    __slots__ = ("seed", "key", "_gen")

    def __init__(self, seed: int, *key: int):
        if seed < 0 or seed > MASK64:
            raise ValueError(f"master seed must fit in 64 bits, got {seed}")
        self.seed = seed
        self.key = tuple(int(k) for k in key)
        seq = np.random.SeedSequence(seed, spawn_key=self.key)
        self._gen = np.random.Generator(np.random.PCG64(seq))

    def substream(self, *key: int) -> RandomSource:
        return RandomSource(self.seed, *self.key, *key)

    def random(self) -> float:
        """One uniform draw on [0, 1)."""
        return float(self._gen.random())

    def randoms(self, shape: int | tuple[int, ...]) -> np.ndarray:
        return self._gen.random(shape)

    def __repr__(self):
        return f"RandomSource(seed={self.seed}, key={self.key})"


@dataclass(frozen=True)
class PerturbedTimer:
    """Duration with mean ``mean`` and symmetric perturbation ``perturbation`` (ms).

    Draws are uniform on ``[mean - perturbation, mean + perturbation]`` and
    clamped below at zero.
    """

    mean: float
    perturbation: float = 0.0

    def __post_init__(self):
        if not (self.mean >= 0 and math.isfinite(self.mean)):
            raise ValueError(f"timer mean must be finite and >= 0, got {self.mean}")
        if not (self.perturbation >= 0 and math.isfinite(self.perturbation)):
            raise ValueError(f"timer perturbation must be finite and >= 0, got {self.perturbation}")

    @property
    def low(self) -> float:
        return max(0.0, self.mean - self.perturbation)

    @property
    def high(self) -> float:
        return self.mean + self.perturbation

    def from_uniform(self, u: float) -> float:
        """Map a uniform draw ``u`` in [0, 1) onto the timer's support."""
        if self.perturbation == 0.0:
            return self.mean
        return max(0.0, self.mean - self.perturbation + 2.0 * self.perturbation * u)

    def expected(self) -> float:
        """Mean of the clamped distribution."""
        lo, hi = self.mean - self.perturbation, self.mean + self.perturbation
        if lo >= 0 or self.perturbation == 0:
            return self.mean
        return hi * hi / (4.0 * self.perturbation)


@dataclass(frozen=True)
class ExponentialTimer:
    """Exponentially distributed duration with rate ``rate`` (1/ms)."""

    rate: float

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ValueError(f"exponential rate must be finite and > 0, got {self.rate}")

    @property
    def mean(self) -> float:
        return 1.0 / self.rate

    def from_uniform(self, u: float) -> float:
        # inverse CDF; 1 - u keeps u = 0 finite
        return -math.log1p(-u) / self.rate


def sample_perturbed(timer: PerturbedTimer, rng: RandomSource) -> float:
    return timer.from_uniform(rng.random())


def sample_exponential(timer: ExponentialTimer, rng: RandomSource) -> float:
    return timer.from_uniform(rng.random())


def exponential_array(rate: float, u: np.ndarray) -> np.ndarray:
    """Vectorised inverse-CDF exponential draws from uniforms ``u``."""
    if not (rate > 0 and math.isfinite(rate)):
        raise ValueError(f"exponential rate must be finite and > 0, got {rate}")
    return -np.log1p(-u) / rate
