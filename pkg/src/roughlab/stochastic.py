"""Seeded Brownian sampling on dissections and a small Monte-Carlo harness.

Reproducibility contract: a sample is a deterministic function of the
(seed, stream) pair.  Streams are spawned as
``numpy.random.SeedSequence((seed, stream))`` feeding the counter-based
Philox bit generator, and Gaussians come from ``Generator.standard_normal``;
identical pairs give bit-identical output on one platform (cross-platform
bit-exactness is not promised).  Distinct streams are statistically
independent, so workers may consume them in any order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .paths import Dissection, PiecewisePath


@dataclass(frozen=True)
class RngSpec:
    """Seed plus stream id, one stream per sample path."""

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(np.random.SeedSequence((self.seed, self.stream))))

    def child(self, stream: int) -> "RngSpec":
        return RngSpec(self.seed, stream)


def sample_brownian(grid: Dissection, d: int, rng: RngSpec) -> PiecewisePath:
    """Brownian sample on the grid, linearly interpolated between grid
    points: independent Gaussian increments with variance equal to the time
    step, per coordinate, started at the origin."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    gen = rng.generator()
    dt = np.diff(grid.times)
    increments = gen.standard_normal((len(dt), d)) * np.sqrt(dt)[:, None]
    values = np.vstack([np.zeros(d), np.cumsum(increments, axis=0)])
    return PiecewisePath(grid.times, values)


@dataclass(frozen=True)
class McEstimate:
    """Sample mean with its standard error (sample stdev / sqrt(count))."""

    mean: np.ndarray | float
    stderr: np.ndarray | float
    count: int

    def within(self, target, k_sigma: float = 3.0) -> bool:
        """True when |mean - target| <= k_sigma * stderr, componentwise."""
        return bool(np.all(np.abs(np.asarray(self.mean) - np.asarray(target))
                           <= k_sigma * np.asarray(self.stderr) + 1e-300))


def mc_run(experiment: Callable[[RngSpec], float | np.ndarray], count: int, base: RngSpec) -> McEstimate:
    """Run the experiment closure on ``count`` independent streams and
    report mean and standard error (scalar or per-coordinate)."""
    if count < 2:
        raise ValueError("need at least two samples for a standard error")
    samples = np.array([np.asarray(experiment(base.child(i)), dtype=float) for i in range(count)])
    mean = samples.mean(axis=0)
    stderr = samples.std(axis=0, ddof=1) / np.sqrt(count)
    if samples.ndim == 1:
        return McEstimate(float(mean), float(stderr), count)
    return McEstimate(mean, stderr, count)
