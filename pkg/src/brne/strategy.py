"""Trajectory and sampled mixed-strategy value types.

All arrays held by these types are made read-only on construction so the
objects can be shared freely between planners, solvers and threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray


class GridMismatchError(ValueError):
    """Two trajectories or strategies live on different time grids."""


class DegenerateWeightsError(ValueError):
    """Weights cannot be normalized (all zero, negative or non-finite)."""


def _frozen(a: ArrayLike, dtype=float) -> NDArray[np.float64]:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimeGrid:
    """Fixed planning grid: ``horizon_steps`` waypoints spaced ``dt`` seconds."""

    horizon_steps: int
    dt: float

    def __post_init__(self):
        if int(self.horizon_steps) != self.horizon_steps or self.horizon_steps < 2:
            raise ValueError(f"horizon_steps must be an integer >= 2, got {self.horizon_steps}")
        if not (self.dt > 0 and np.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "horizon_steps", int(self.horizon_steps))
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def horizon(self) -> float:
        return self.horizon_steps * self.dt

    @property
    def times(self) -> NDArray[np.float64]:
        return np.arange(self.horizon_steps) * self.dt


@dataclass(frozen=True, eq=False)
class Trajectory:
    """A pure strategy: ``T`` planar waypoints aligned to ``grid``."""

    points: NDArray[np.float64]
    grid: TimeGrid

    def __post_init__(self):
        pts = _frozen(self.points)
        if pts.shape != (self.grid.horizon_steps, 2):
            raise ValueError(
                f"expected points of shape ({self.grid.horizon_steps}, 2), got {pts.shape}"
            )
        if not np.all(np.isfinite(pts)):
            raise ValueError("trajectory points must be finite")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.grid.horizon_steps


@dataclass(frozen=True, eq=False)
class SampledMixedStrategy:
    """Mixed strategy in sample form.

    ``samples`` has shape ``(M, T, 2)``. ``weights`` are importance ratios
    against the distribution the samples were drawn from; in normalized form
    their mean is 1, so ``mean(w * f(s))`` estimates the expectation of ``f``.
    """

    samples: NDArray[np.float64]
    weights: NDArray[np.float64]
    grid: TimeGrid

    def __post_init__(self):
        s = _frozen(self.samples)
        w = _frozen(self.weights)
        if s.ndim != 3 or s.shape[1:] != (self.grid.horizon_steps, 2):
            raise ValueError(
                f"samples must have shape (M, {self.grid.horizon_steps}, 2), got {s.shape}"
            )
        if s.shape[0] < 1:
            raise ValueError("a sampled strategy needs at least one sample")
        if w.shape != (s.shape[0],):
            raise ValueError(f"expected {s.shape[0]} weights, got shape {w.shape}")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise DegenerateWeightsError("weights must be finite and non-negative")
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "weights", w)

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    def trajectory(self, j: int) -> Trajectory:
        return Trajectory(self.samples[j], self.grid)

    def with_weights(self, weights: ArrayLike) -> SampledMixedStrategy:
        return SampledMixedStrategy(self.samples, weights, self.grid)

    def effective_sample_size(self) -> float:
        w = self.weights
        return float(w.sum() ** 2 / np.sum(w * w))


@dataclass(frozen=True)
class AgentObservation:
    """Observed planar position and velocity of one agent (id 0 is the robot)."""

    position: tuple[float, float]
    velocity: tuple[float, float]
    agent_id: int = 0

    def __post_init__(self):
        p = tuple(float(v) for v in self.position)
        v = tuple(float(c) for c in self.velocity)
        if len(p) != 2 or len(v) != 2:
            raise ValueError("position and velocity must be planar")
        if not all(np.isfinite(p + v)):
            raise ValueError("observation must be finite")
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "velocity", v)

    @property
    def speed(self) -> float:
        return float(np.hypot(*self.velocity))


def check_same_grid(*grids: TimeGrid) -> TimeGrid:
    first = grids[0]
    for g in grids[1:]:
        if g != first:
            raise GridMismatchError(f"time grids differ: {first} vs {g}")
    return first


def normalize_weights(weights: ArrayLike) -> NDArray[np.float64]:
    """Rescale non-negative weights so that their mean is 1."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise DegenerateWeightsError("weights must be a non-empty 1-d array")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise DegenerateWeightsError("weights must be finite and non-negative")
    peak = w.max()
    if not peak > 0:
        raise DegenerateWeightsError("all weights are zero")
    # divide by the peak first so tiny or huge totals neither overflow nor underflow
    u = w / peak
    return u * (w.size / u.sum())


def weighted_mean_trajectory(strategy: SampledMixedStrategy) -> Trajectory:
    """Importance-weighted average trajectory ``(1/M) sum_j w_j s_j``."""
    w = strategy.weights
    pts = np.tensordot(w, strategy.samples, axes=(0, 0)) / strategy.n_samples
    return Trajectory(pts, strategy.grid)


def min_pairwise_distance(a: Trajectory, b: Trajectory) -> float:
    """Smallest distance between two trajectories at matching time steps."""
    check_same_grid(a.grid, b.grid)
    return float(np.min(np.linalg.norm(a.points - b.points, axis=1)))
