"""Privacy parameters, seeded noise samplers, and budget bookkeeping.

The tree builder consumes a fixed budget per tree level: levels compose
sequentially while sibling candidate counts at one level live on disjoint
record sets and therefore share the level budget. All randomness flows
through a :class:`RandomSource` so runs are reproducible bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

#: Adding or removing one record changes any prefix count by at most one.
COUNT_SENSITIVITY = 1.0


@dataclass(frozen=True)
class PrivacyParams:
    """Total budget, tree height, and the derived per-level quantities.

    ``threshold`` is ``theta_multiplier`` times the standard deviation of the
    per-level Laplace noise; candidate nodes whose noisy count falls below it
    are dropped. The default multiplier of 2 keeps roughly 3% of empty
    candidates regardless of the budget split. ``theta_multiplier=0`` disables
    thresholding (useful only for noise-free pipeline checks).
    """

    epsilon: float
    height: int
    theta_multiplier: float = 2.0

    def __post_init__(self) -> None:
        if not (isinstance(self.epsilon, (int, float)) and self.epsilon > 0):
            raise ValueError(f"epsilon must be > 0, got {self.epsilon!r}")
        if not (isinstance(self.height, int) and self.height >= 1):
            raise ValueError(f"height must be an integer >= 1, got {self.height!r}")
        if self.theta_multiplier < 0:
            raise ValueError(f"theta multiplier must be >= 0, got {self.theta_multiplier!r}")
        per_level = self.epsilon / self.height
        # std of Laplace(scale) is scale * sqrt(2)
        threshold = self.theta_multiplier * math.sqrt(2.0) * COUNT_SENSITIVITY / per_level
        object.__setattr__(self, "_per_level", per_level)
        object.__setattr__(self, "_threshold", threshold)
        object.__setattr__(
            self, "_pass_probability", math.exp(-per_level * threshold / COUNT_SENSITIVITY) / 2.0
        )

    @property
    def per_level(self) -> float:
        """Budget spent on each tree level."""
        return self._per_level

    @property
    def noise_scale(self) -> float:
        """Laplace scale for one noisy count at one level."""
        return COUNT_SENSITIVITY / self._per_level

    @property
    def threshold(self) -> float:
        return self._threshold

    @property
    def pass_probability(self) -> float:
        """Probability that a zero-count candidate's noisy count clears the threshold."""
        return self._pass_probability


@dataclass(frozen=True)
class BudgetLedger:
    """Per-level budget assignment, kept in exact rational arithmetic.

    Each level gets epsilon/height; the sum over levels reconstructs epsilon
    exactly, which :attr:`conserved` asserts without floating-point slack.
    """

    epsilon: float
    levels: tuple[Fraction, ...]

    @property
    def height(self) -> int:
        return len(self.levels)

    @property
    def total(self) -> Fraction:
        return sum(self.levels, Fraction(0))

    @property
    def conserved(self) -> bool:
        return self.total == Fraction(self.epsilon)

    def describe(self) -> list[str]:
        lines = [
            f"budget.level.{i} epsilon={float(share):.10g}"
            for i, share in enumerate(self.levels, start=1)
        ]
        lines.append(
            f"budget.total epsilon={float(self.total):.10g} conserved={str(self.conserved).lower()}"
        )
        return lines


def budget_ledger(params: PrivacyParams) -> BudgetLedger:
    share = Fraction(params.epsilon) / params.height
    return BudgetLedger(epsilon=params.epsilon, levels=(share,) * params.height)


class RandomSource:
    """Deterministic generator factory with sub-streams keyed by tree path.

    Two sources with the same seed yield identical streams for identical keys,
    so level-parallel tree construction reproduces the single-threaded output
    no matter how nodes are scheduled.
    """

    def __init__(self, seed: int):
        seed = int(seed)
        if seed < 0:
            raise ValueError("seed must be non-negative")
        self.seed = seed

    def stream(self, *key: int) -> np.random.Generator:
        # The key length is part of the entropy: SeedSequence treats trailing
        # zero words as no-ops, so (3,) and (3, 0) would otherwise collide.
        return np.random.default_rng(np.random.SeedSequence((self.seed, len(key), *key)))


class _ZeroNoiseStream:
    """Stands in for a Generator; forces Laplace noise to 0 and spawns no empty nodes."""

    def random(self, size=None):
        if size is None:
            return 0.5
        return np.full(size, 0.5)

    def binomial(self, n: int, p: float) -> int:
        return 0


class ZeroNoiseSource(RandomSource):
    """Degenerate source for end-to-end identity checks of the pipeline."""

    def __init__(self):
        super().__init__(0)

    def stream(self, *key: int) -> _ZeroNoiseStream:  # type: ignore[override]
        return _ZeroNoiseStream()


def laplace_noise(scale: float, rng, size=None):
    """Laplace(scale) sample(s) by inverse transform, u uniform in (-1/2, 1/2]."""
    if scale <= 0:
        raise ValueError(f"scale must be > 0, got {scale!r}")
    if size is None:
        u = 0.5 - rng.random()
        while u == 0.5:  # rng.random() hit exactly 0.0; would map to +inf
            u = 0.5 - rng.random()
        return -scale * math.copysign(1.0, u) * math.log1p(-2.0 * abs(u))
    u = 0.5 - rng.random(size)
    while True:
        degenerate = u == 0.5
        if not degenerate.any():
            break
        u[degenerate] = 0.5 - rng.random(int(degenerate.sum()))
    return -scale * np.sign(u) * np.log1p(-2.0 * np.abs(u))


def laplace_noisy_count(true_count: int, scale: float, rng) -> float:
    """Noisy version of a non-negative count: count plus Laplace(scale) noise."""
    if true_count < 0:
        raise ValueError(f"count must be non-negative, got {true_count!r}")
    return float(true_count) + laplace_noise(scale, rng)


def sample_pass_count(m: int, params: PrivacyParams, rng) -> int:
    """Number of m zero-count candidates whose noisy count would clear the threshold.

    Equivalent to running the m independent noisy-count checks and counting
    the passes, but in one binomial draw.
    """
    if m < 0:
        raise ValueError(f"candidate count must be >= 0, got {m!r}")
    return int(rng.binomial(m, params.pass_probability))


def sample_passing_noisy_count(params: PrivacyParams, rng, size=None):
    """Noisy count for a zero-count candidate conditioned on clearing the threshold.

    The conditional law is the threshold plus an exponential with rate equal
    to the per-level budget; sampled as ``threshold - log(1 - u) / rate``.
    """
    u = rng.random() if size is None else rng.random(size)
    log1p = math.log1p if size is None else np.log1p
    return params.threshold - log1p(-u) / params.per_level
