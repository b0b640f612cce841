"""Receding-horizon navigation around BRNE.

Each cycle builds nominal strategies for the robot (goal-directed GP) and the
tracked pedestrians (constant-velocity GPs), solves the game, and tracks the
importance-weighted mean of the robot's posterior with a pure-pursuit
controller.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .gp import KernelSpec, goal_nominal, pedestrian_nominal, robot_mean
from .risk import RiskParams
from .solver import SolveConfig, SolveResult, SolverError, solve
from .strategy import AgentObservation, TimeGrid, Trajectory, weighted_mean_trajectory

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PlannerConfig:
    horizon_steps: int = 35
    dt: float = 0.2
    samples_per_agent: int = 200
    replan_period: float = 0.2
    max_tracked_agents: int = 5
    nominal_speed: float = 1.2
    kernel: KernelSpec = field(default_factory=KernelSpec)
    start_std: float = 1e-3
    end_std: float = 0.2
    # anchor the goal-directed nominal at the goal for every step after arrival
    hold_at_goal: bool = True
    # tracking
    lookahead_time: float = 0.5
    heading_gain: float = 2.0
    max_linear_speed: float = 1.5
    max_angular_speed: float = 2.0
    goal_tolerance: float = 0.2

    def __post_init__(self):
        if self.replan_period < self.dt - 1e-12:
            raise ValueError("replan_period must be >= dt")
        if self.max_tracked_agents < 1:
            raise ValueError("max_tracked_agents must be >= 1")
        if self.samples_per_agent < 1:
            raise ValueError("samples_per_agent must be >= 1")
        if self.lookahead_time <= 0:
            raise ValueError("lookahead_time must be positive")

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(self.horizon_steps, self.dt)


@dataclass(frozen=True)
class RobotCommand:
    linear: float
    angular: float


@dataclass
class PlanResult:
    trajectory: Trajectory
    result: SolveResult | None
    tracked_ids: tuple[int, ...] = ()
    fallback: bool = False


def select_agents(robot: AgentObservation, peds: Sequence[AgentObservation], k: int):
    """Nearest ``k`` pedestrians; equal distances are broken by agent id."""
    p = np.asarray(robot.position)
    keyed = sorted(peds, key=lambda o: (float(np.hypot(*(np.asarray(o.position) - p))), o.agent_id))
    return keyed[:k]


def plan_step(
    robot_obs: AgentObservation,
    pedestrian_obs: Sequence[AgentObservation],
    goal,
    config: PlannerConfig,
    params: RiskParams,
    seed: int,
    solve_config: SolveConfig | None = None,
) -> PlanResult:
    """One planning cycle: nominals, BRNE solve, weighted-mean robot plan."""
    grid = config.grid
    if not pedestrian_obs:
        return PlanResult(robot_mean(robot_obs.position, goal, config.nominal_speed, grid), None)
    tracked = select_agents(robot_obs, pedestrian_obs, config.max_tracked_agents)
    ids = tuple(o.agent_id for o in tracked)
    solve_config = solve_config or SolveConfig()
    try:
        nominals = [
            goal_nominal(robot_obs.position, goal, config.nominal_speed, grid, config.kernel,
                         config.start_std, config.end_std, config.hold_at_goal)
        ]
        nominals += [pedestrian_nominal(o, grid, config.kernel, config.start_std) for o in tracked]
        res = solve(nominals, solve_config, params, seed, M=config.samples_per_agent)
        plan = weighted_mean_trajectory(res.strategies[0])
    except (SolverError, ValueError, np.linalg.LinAlgError) as exc:
        log.warning("planner fell back to the nominal mean: %s", exc)
        plan = robot_mean(robot_obs.position, goal, config.nominal_speed, grid)
        return PlanResult(plan, None, ids, fallback=True)
    return PlanResult(plan, res, ids)


def plan_joint(
    positions,
    goals,
    config: PlannerConfig,
    params: RiskParams,
    seed: int,
    solve_config: SolveConfig | None = None,
):
    """Solve one game for all agents; return each agent's weighted-mean plan.

    Agents sitting on their goal get a stationary nominal (still uncertain,
    so the others keep clear of them).
    """
    grid = config.grid
    nominals = [
        goal_nominal(p, g, config.nominal_speed, grid, config.kernel, config.start_std, config.end_std,
                     config.hold_at_goal)
        for p, g in zip(positions, goals)
    ]
    res = solve(nominals, solve_config or SolveConfig(), params, seed, M=config.samples_per_agent)
    return [weighted_mean_trajectory(s) for s in res.strategies], res


def _wrap(angle):
    return (angle + math.pi) % (2 * math.pi) - math.pi


def lookahead_point(plan: Trajectory, elapsed: float, config: PlannerConfig):
    """Plan position ``lookahead_time`` past ``elapsed``, linearly interpolated."""
    t = plan.grid.times
    tq = min(elapsed + config.lookahead_time, t[-1])
    x = np.interp(tq, t, plan.points[:, 0])
    y = np.interp(tq, t, plan.points[:, 1])
    return np.array([x, y]), tq - elapsed


def track(plan: Trajectory, pose, config: PlannerConfig, elapsed: float = 0.0) -> RobotCommand:
    """Pure-pursuit command toward the lookahead point of ``plan``.

    ``pose`` is ``(x, y, heading)``; ``elapsed`` is the time since the plan
    was made. The angular rate is proportional to the heading error, the
    linear speed to the progress along the heading needed to reach the
    lookahead point on time. Both are clamped.
    """
    x, y, th = (float(v) for v in pose)
    target, horizon = lookahead_point(plan, elapsed, config)
    d = target - np.array([x, y])
    dist = float(np.hypot(*d))
    if dist < 1e-9 or horizon <= 0:
        return RobotCommand(0.0, 0.0)
    err = _wrap(math.atan2(d[1], d[0]) - th)
    w = float(np.clip(config.heading_gain * err, -config.max_angular_speed, config.max_angular_speed))
    progress = d[0] * math.cos(th) + d[1] * math.sin(th)
    v = float(np.clip(progress / horizon, 0.0, config.max_linear_speed))
    return RobotCommand(v, w)
