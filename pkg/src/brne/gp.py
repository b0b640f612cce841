"""Gaussian-process nominal strategies over a fixed time grid.

A nominal strategy is a GP over time with a radial-basis kernel, conditioned
on a few anchor time steps (soft constraints with a small marginal std) and
discretized on the planning grid. The x and y axes are independent GPs that
share one kernel, so a single ``T x T`` Cholesky factor serves both axes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .strategy import AgentObservation, SampledMixedStrategy, TimeGrid, Trajectory, _frozen

DEFAULT_ANCHOR_STD = 1e-3


class CovarianceFactorizationError(np.linalg.LinAlgError):
    """Cholesky factorization failed even at the largest jitter."""


@dataclass(frozen=True)
class KernelSpec:
    """RBF kernel ``variance * exp(-(t - t')**2 / (2 * lengthscale**2))``.

    ``variance`` is in m^2, ``lengthscale`` in seconds.
    """

    variance: float = 3.0
    lengthscale: float = 2.5

    def __post_init__(self):
        if not self.variance > 0 or not self.lengthscale > 0:
            raise ValueError("kernel variance and lengthscale must be positive")

    def gram(self, times: ArrayLike) -> NDArray[np.float64]:
        t = np.asarray(times, dtype=float)
        d = t[:, None] - t[None, :]
        return self.variance * np.exp(-0.5 * (d / self.lengthscale) ** 2)


@dataclass(frozen=True)
class Anchor:
    index: int
    value: tuple[float, float]
    std: float = DEFAULT_ANCHOR_STD


@dataclass(frozen=True)
class GPConditioning:
    """Anchors at grid indices, each with a planar value and marginal std."""

    anchors: tuple[Anchor, ...] = ()

    def __post_init__(self):
        anchors = tuple(
            a if isinstance(a, Anchor) else Anchor(int(a[0]), tuple(a[1]), float(a[2]))
            for a in self.anchors
        )
        idx = [a.index for a in anchors]
        if any(j <= i for i, j in zip(idx, idx[1:])):
            raise ValueError("anchor indices must be strictly increasing")
        if any(a.std <= 0 for a in anchors):
            raise ValueError("anchor std must be positive")
        object.__setattr__(self, "anchors", anchors)

    def validate(self, grid: TimeGrid) -> None:
        for a in self.anchors:
            if not 0 <= a.index < grid.horizon_steps:
                raise ValueError(f"anchor index {a.index} outside grid of {grid.horizon_steps} steps")


@dataclass(frozen=True, eq=False)
class NominalStrategy:
    """Discretized conditioned GP: mean trajectory plus shared per-axis factor."""

    mean: Trajectory
    cov_factor: NDArray[np.float64]
    grid: TimeGrid

    def __post_init__(self):
        L = _frozen(self.cov_factor)
        T = self.grid.horizon_steps
        if L.shape != (T, T):
            raise ValueError(f"cov_factor must be {T}x{T}")
        object.__setattr__(self, "cov_factor", L)

    @property
    def covariance(self) -> NDArray[np.float64]:
        return self.cov_factor @ self.cov_factor.T

    @property
    def marginal_std(self) -> NDArray[np.float64]:
        return np.sqrt(np.sum(self.cov_factor**2, axis=1))

    def draw(self, n: int, rng: np.random.Generator) -> NDArray[np.float64]:
        """Draw ``n`` raw trajectories, shape ``(n, T, 2)``."""
        z = rng.standard_normal((n, self.grid.horizon_steps, 2))
        return self.mean.points[None] + np.einsum("ts,nsk->ntk", self.cov_factor, z)


def pedestrian_mean(obs: AgentObservation, grid: TimeGrid) -> Trajectory:
    """Constant-velocity extrapolation of an observed agent."""
    t = grid.times[:, None]
    return Trajectory(np.asarray(obs.position) + np.asarray(obs.velocity) * t, grid)


def robot_mean(
    start: ArrayLike, goal: ArrayLike, nominal_speed: float, grid: TimeGrid
) -> Trajectory:
    """Straight line from ``start`` toward ``goal`` at ``nominal_speed``, held at the goal."""
    if not nominal_speed > 0:
        raise ValueError("nominal_speed must be positive")
    start = np.asarray(start, dtype=float)
    goal = np.asarray(goal, dtype=float)
    delta = goal - start
    dist = float(np.hypot(*delta))
    if dist == 0.0:
        return Trajectory(np.repeat(start[None], grid.horizon_steps, axis=0), grid)
    travelled = np.minimum(nominal_speed * grid.times, dist)
    return Trajectory(start + travelled[:, None] * (delta / dist), grid)


def _robust_cholesky(cov: NDArray[np.float64], variance: float) -> NDArray[np.float64]:
    eye = np.eye(cov.shape[0])
    jitter = 1e-10 * variance
    while jitter <= 1e-4 * variance * (1 + 1e-9):
        try:
            return np.linalg.cholesky(cov + jitter * eye)
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise CovarianceFactorizationError(
        f"covariance not positive definite after jitter {1e-4 * variance:g}"
    )


def posterior_covariance(
    kernel: KernelSpec, cond: GPConditioning, grid: TimeGrid
) -> NDArray[np.float64]:
    """Conditioned covariance before jitter, symmetrized."""
    K = kernel.gram(grid.times)
    if not cond.anchors:
        return K
    idx = np.array([a.index for a in cond.anchors])
    noise = np.array([a.std for a in cond.anchors]) ** 2
    Ka = K[:, idx]
    Kaa = K[np.ix_(idx, idx)] + np.diag(noise)
    cov = K - Ka @ np.linalg.solve(Kaa, Ka.T)
    return 0.5 * (cov + cov.T)


def condition_gp(
    kernel: KernelSpec, mean: Trajectory, cond: GPConditioning, grid: TimeGrid
) -> NominalStrategy:
    """Condition the GP prior (mean + kernel) on soft anchors and discretize it.

    The posterior mean follows standard GP regression with anchor noise
    ``std**2``; the covariance is ``K - K_a (K_aa + diag(std**2))^-1 K_a^T``,
    factorized with an escalating jitter.
    """
    if mean.grid != grid:
        raise ValueError("mean trajectory must be on the conditioning grid")
    cond.validate(grid)
    K = kernel.gram(grid.times)
    m = np.array(mean.points)
    if cond.anchors:
        idx = np.array([a.index for a in cond.anchors])
        noise = np.array([a.std for a in cond.anchors]) ** 2
        y = np.array([a.value for a in cond.anchors], dtype=float)
        Ka = K[:, idx]
        Kaa = K[np.ix_(idx, idx)] + np.diag(noise)
        m = m + Ka @ np.linalg.solve(Kaa, y - m[idx])
    cov = posterior_covariance(kernel, cond, grid)
    L = _robust_cholesky(cov, kernel.variance)
    return NominalStrategy(Trajectory(m, grid), L, grid)


def sample_trajectories(
    nominal: NominalStrategy, M: int, rng_seed: int | np.random.SeedSequence | np.random.Generator
) -> SampledMixedStrategy:
    """Draw ``M`` trajectories from a nominal strategy, all with weight 1."""
    if M < 1:
        raise ValueError("M must be >= 1")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    return SampledMixedStrategy(nominal.draw(M, rng), np.ones(M), nominal.grid)


def pedestrian_nominal(
    obs: AgentObservation,
    grid: TimeGrid,
    kernel: KernelSpec,
    start_std: float = DEFAULT_ANCHOR_STD,
) -> NominalStrategy:
    """Constant-velocity GP anchored only at the current position."""
    mean = pedestrian_mean(obs, grid)
    cond = GPConditioning((Anchor(0, obs.position, start_std),))
    return condition_gp(kernel, mean, cond, grid)


def goal_nominal(
    start: Sequence[float],
    goal: Sequence[float],
    nominal_speed: float,
    grid: TimeGrid,
    kernel: KernelSpec,
    start_std: float = DEFAULT_ANCHOR_STD,
    end_std: float = 0.2,
    hold_at_goal: bool = False,
) -> NominalStrategy:
    """Goal-directed GP anchored at the start and at the mean's endpoint.

    With ``hold_at_goal`` every step after the mean reaches the goal is
    anchored there too (std ``end_std``), so an agent that has arrived is not
    sent wandering by the kernel variance.
    """
    mean = robot_mean(start, goal, nominal_speed, grid)
    T = grid.horizon_steps
    idx = [T - 1]
    if hold_at_goal:
        dist = float(np.hypot(*(np.asarray(goal, dtype=float) - np.asarray(start, dtype=float))))
        at_goal = nominal_speed * grid.times >= dist
        idx = sorted(set(np.flatnonzero(at_goal[1:]) + 1) | {T - 1})
    anchors = [Anchor(0, tuple(mean.points[0]), start_std)]
    anchors += [Anchor(int(k), tuple(mean.points[k]), end_std) for k in idx]
    return condition_gp(kernel, mean, GPConditioning(tuple(anchors)), grid)
