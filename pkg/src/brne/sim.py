"""Episode simulation for the multi-agent and crowd-navigation benchmarks.

Scenarios place agents on a circle (goal = antipodal point), in a hallway, or
replay recorded pedestrian tracks. The robot is a differential-drive vehicle
integrated exactly; pedestrians follow one of three models (scripted
constant velocity, reactive social force, playback). Collisions are checked
once per control step.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from .gp import robot_mean
from .nav import PlannerConfig, RobotCommand, lookahead_point, plan_joint, plan_step, track
from .risk import RiskParams
from .solver import SolveConfig
from .strategy import AgentObservation, Trajectory

log = logging.getLogger(__name__)

SCHEMA_VERSION = "brne-trace/1"
SCENARIO_KINDS = ("circle", "hallway", "playback")
MAX_SPAWN_TRIES = 10_000


class InfeasibleScenarioError(ValueError):
    pass


class PlaybackParseError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str = "circle"
    n_agents: int = 6
    circle_radius: float = 3.0
    min_spawn_separation: float = 0.6
    desired_speed: float = 1.2
    body_radius: float = 0.3
    episode_timeout: float = 60.0
    rng_seed: int = 0
    control_dt: float = 0.1
    hallway_length: float = 8.0
    hallway_width: float = 3.0

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise ValueError(f"kind must be one of {SCENARIO_KINDS}")
        if self.min_spawn_separation < 2 * self.body_radius:
            raise ValueError("min_spawn_separation must be >= 2 * body_radius")
        if self.n_agents < 1:
            raise ValueError("n_agents must be >= 1")
        if not self.control_dt > 0 or not self.episode_timeout > 0:
            raise ValueError("control_dt and episode_timeout must be positive")


@dataclass
class Scenario:
    starts: NDArray[np.float64]
    goals: NDArray[np.float64]


def _separated(points, sep):
    d = np.linalg.norm(points[:, None] - points[None], axis=-1)
    np.fill_diagonal(d, np.inf)
    return bool(np.all(d >= sep))


def sample_circle_scenario(config: ScenarioConfig) -> Scenario:
    """Uniform starts on the circle, resampled until separated; goals antipodal."""
    n, r, sep = config.n_agents, config.circle_radius, config.min_spawn_separation
    if n * sep >= 2 * math.pi * r:
        raise InfeasibleScenarioError(f"{n} agents {sep} m apart do not fit on a {r} m circle")
    rng = np.random.default_rng(config.rng_seed)
    for _ in range(MAX_SPAWN_TRIES):
        ang = rng.uniform(0.0, 2 * math.pi, n)
        starts = r * np.stack([np.cos(ang), np.sin(ang)], axis=1)
        if _separated(starts, sep):
            return Scenario(starts, -starts)
    raise InfeasibleScenarioError(f"no separated spawn found in {MAX_SPAWN_TRIES} tries")


def sample_hallway_scenario(config: ScenarioConfig) -> Scenario:
    """Agents split between the two hallway ends, each walking to the other end."""
    n, sep = config.n_agents, config.min_spawn_separation
    half_l, half_w = config.hallway_length / 2, config.hallway_width / 2 - config.body_radius
    rng = np.random.default_rng(config.rng_seed)
    side = np.where(np.arange(n) % 2 == 0, -1.0, 1.0)
    for _ in range(MAX_SPAWN_TRIES):
        x = side * (half_l - rng.uniform(0.0, 1.0, n))
        y = rng.uniform(-half_w, half_w, n)
        starts = np.stack([x, y], axis=1)
        if _separated(starts, sep):
            goals = np.stack([-side * half_l, rng.uniform(-half_w, half_w, n)], axis=1)
            return Scenario(starts, goals)
    raise InfeasibleScenarioError(f"no separated spawn found in {MAX_SPAWN_TRIES} tries")


def make_scenario(config: ScenarioConfig) -> Scenario:
    if config.kind == "circle":
        return sample_circle_scenario(config)
    if config.kind == "hallway":
        return sample_hallway_scenario(config)
    raise ValueError("playback scenarios are built from a trajectory file")


# --- world state and pedestrian models ---------------------------------------


@dataclass
class WorldState:
    t: float
    robot_pose: NDArray[np.float64]  # x, y, heading
    robot_speed: float
    ped_pos: NDArray[np.float64]
    ped_vel: NDArray[np.float64]
    ped_goals: NDArray[np.float64]
    ped_active: NDArray[np.bool_]
    step: int = 0

    @property
    def robot_velocity(self) -> NDArray[np.float64]:
        th = self.robot_pose[2]
        return self.robot_speed * np.array([math.cos(th), math.sin(th)])


def integrate_unicycle(pose, command: RobotCommand, dt: float) -> NDArray[np.float64]:
    """Exact differential-drive integration over ``dt`` for constant (v, w)."""
    x, y, th = pose
    v, w = command.linear, command.angular
    if abs(w) < 1e-9:
        return np.array([x + v * math.cos(th) * dt, y + v * math.sin(th) * dt, th])
    th2 = th + w * dt
    return np.array([
        x + v / w * (math.sin(th2) - math.sin(th)),
        y - v / w * (math.cos(th2) - math.cos(th)),
        (th2 + math.pi) % (2 * math.pi) - math.pi,
    ])


def _toward_goal(pos, goals, speed, dt, tol=1e-9):
    d = goals - pos
    dist = np.linalg.norm(d, axis=1, keepdims=True)
    step = np.minimum(speed * dt, dist)
    unit = np.divide(d, dist, out=np.zeros_like(d), where=dist > tol)
    return unit * step / dt


@dataclass
class ScriptedPedestrians:
    """Constant speed straight toward the goal, stopping there."""

    desired_speed: float = 1.2
    kind: str = "scripted"

    def step(self, state: WorldState, dt: float):
        vel = _toward_goal(state.ped_pos, state.ped_goals, self.desired_speed, dt)
        return state.ped_pos + vel * dt, vel, state.ped_active


@dataclass
class SocialForcePedestrians:
    """Goal attraction plus exponential repulsion from other agents and the robot.

    The total acceleration is clamped to ``accel_cap`` and the speed to
    ``max_speed_factor * desired_speed``.
    """

    desired_speed: float = 1.2
    relaxation_time: float = 0.5
    repulsion_strength: float = 5.0
    repulsion_range: float = 0.5
    body_radius: float = 0.3
    accel_cap: float = 5.0
    max_speed_factor: float = 1.3
    goal_tolerance: float = 0.2
    react_to_robot: bool = True
    kind: str = "social-force"

    def step(self, state: WorldState, dt: float):
        pos, vel = state.ped_pos, state.ped_vel
        d = state.ped_goals - pos
        dist = np.linalg.norm(d, axis=1, keepdims=True)
        unit = np.divide(d, dist, out=np.zeros_like(d), where=dist > 1e-9)
        speed = np.where(dist > self.goal_tolerance, self.desired_speed, 0.0)
        acc = (unit * speed - vel) / self.relaxation_time
        others = [pos]
        if self.react_to_robot:
            others.append(state.robot_pose[None, :2])
        other = np.concatenate(others)
        diff = pos[:, None, :] - other[None]
        dd = np.linalg.norm(diff, axis=-1)
        n = pos.shape[0]
        dd[np.arange(n), np.arange(n)] = np.inf
        mag = self.repulsion_strength * np.exp((2 * self.body_radius - dd) / self.repulsion_range)
        push = np.divide(diff, dd[..., None], out=np.zeros_like(diff), where=np.isfinite(dd)[..., None])
        acc = acc + np.sum(mag[..., None] * push, axis=1)
        norm = np.linalg.norm(acc, axis=1, keepdims=True)
        acc = acc * np.minimum(1.0, self.accel_cap / np.maximum(norm, 1e-12))
        vel = vel + acc * dt
        vmax = self.max_speed_factor * self.desired_speed
        s = np.linalg.norm(vel, axis=1, keepdims=True)
        vel = vel * np.minimum(1.0, vmax / np.maximum(s, 1e-12))
        return pos + vel * dt, vel, state.ped_active


@dataclass
class PlaybackPedestrians:
    """Replays recorded positions; ``frames[k]`` is the state at step ``k``."""

    frames: NDArray[np.float64]  # (steps, P, 2)
    active: NDArray[np.bool_]  # (steps, P)
    dt: float
    kind: str = "playback"

    def frame(self, k: int):
        k = min(k, self.frames.shape[0] - 1)
        return self.frames[k], self.active[k]

    def step(self, state: WorldState, dt: float):
        pos, act = self.frame(state.step + 1)
        prev, _ = self.frame(state.step)
        return pos.copy(), (pos - prev) / dt, act.copy()


def load_playback(path, dt: float) -> PlaybackPedestrians:
    """Read ``agent_id,t_seconds,x_m,y_m`` rows and resample them onto ``dt``.

    Agents are present from their first to their last timestamp; outside that
    window they are inactive and held at their nearest recorded position.
    """
    path = Path(path)
    tracks: dict[int, list[tuple[float, float, float]]] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise PlaybackParseError(f"{path}: empty file")
        if [h.strip() for h in header] != ["agent_id", "t_seconds", "x_m", "y_m"]:
            raise PlaybackParseError(f"{path}:1: expected header agent_id,t_seconds,x_m,y_m")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise PlaybackParseError(f"{path}:{line}: expected 4 columns, got {len(row)}")
            try:
                aid = int(row[0])
                t, x, y = (float(c) for c in row[1:])
            except ValueError as exc:
                raise PlaybackParseError(f"{path}:{line}: {exc}") from None
            if not all(math.isfinite(v) for v in (t, x, y)):
                raise PlaybackParseError(f"{path}:{line}: non-finite value")
            series = tracks.setdefault(aid, [])
            if series and t <= series[-1][0]:
                raise PlaybackParseError(f"{path}:{line}: timestamps out of order for agent {aid}")
            series.append((t, x, y))
    if not tracks:
        raise PlaybackParseError(f"{path}: no trajectory rows")
    ids = sorted(tracks)
    t0 = min(s[0][0] for s in tracks.values())
    t1 = max(s[-1][0] for s in tracks.values())
    n_steps = int(math.floor((t1 - t0) / dt + 1e-9)) + 1
    times = t0 + np.arange(n_steps) * dt
    frames = np.zeros((n_steps, len(ids), 2))
    active = np.zeros((n_steps, len(ids)), dtype=bool)
    for j, aid in enumerate(ids):
        s = np.array(tracks[aid])
        frames[:, j, 0] = np.interp(times, s[:, 0], s[:, 1])
        frames[:, j, 1] = np.interp(times, s[:, 0], s[:, 2])
        active[:, j] = (times >= s[0, 0] - 1e-9) & (times <= s[-1, 0] + 1e-9)
    return PlaybackPedestrians(frames, active, dt)


def step_world(state: WorldState, dt: float, robot_command: RobotCommand, pedestrian_model) -> WorldState:
    pose = integrate_unicycle(state.robot_pose, robot_command, dt)
    pos, vel, act = pedestrian_model.step(state, dt)
    return WorldState(
        t=state.t + dt,
        robot_pose=pose,
        robot_speed=robot_command.linear,
        ped_pos=pos,
        ped_vel=vel,
        ped_goals=state.ped_goals,
        ped_active=act,
        step=state.step + 1,
    )


# --- episodes -----------------------------------------------------------------


@dataclass
class Metrics:
    safety_distance: float
    collided: bool
    path_lengths: list[float]
    time_to_goal: float
    max_path_length: float
    froze: bool
    closing_agent: int | None = None


@dataclass
class StepRecord:
    t: float
    positions: list[list[float]]
    velocities: list[list[float]]
    planned: list[list[float]] | None = None
    free_energy: list[float] | None = None
    iterations: int | None = None
    solve_time: float | None = None
    fallback: bool = False


@dataclass
class EpisodeTrace:
    kind: str
    seed: int
    control_dt: float
    agent_ids: list[int]
    steps: list[StepRecord] = field(default_factory=list)
    metrics: Metrics | None = None

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "kind": self.kind,
            "seed": self.seed,
            "control_dt": self.control_dt,
            "agent_ids": self.agent_ids,
            "metrics": asdict(self.metrics) if self.metrics else None,
            "steps": [asdict(s) for s in self.steps],
        }

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), separators=(",", ":")))

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            fh.write(f"# schema {SCHEMA_VERSION}\n")
            w = csv.writer(fh)
            w.writerow(["step", "t", "agent_id", "x", "y", "vx", "vy"])
            for k, s in enumerate(self.steps):
                for aid, p, v in zip(self.agent_ids, s.positions, s.velocities):
                    w.writerow([k, f"{s.t:.6f}", aid, repr(p[0]), repr(p[1]), repr(v[0]), repr(v[1])])


def _closing_agent(prev, cur, ids, pair):
    """Agent whose own motion over the last step shrank the pair's gap the most."""
    a, b = pair
    gap = prev[b] - prev[a]
    n = gap / max(np.linalg.norm(gap), 1e-12)
    da = float(np.dot(cur[a] - prev[a], n))  # a moving toward b
    db = float(-np.dot(cur[b] - prev[b], n))
    return ids[a] if da >= db else ids[b]


def compute_metrics(
    positions: NDArray[np.float64],
    active: NDArray[np.bool_],
    reached_at: Sequence[float | None],
    body_radius: float,
    pairs: str,
    ids: Sequence[int],
    timeout_hit: bool,
) -> Metrics:
    """Metrics from recorded positions ``(steps, n, 2)``.

    ``pairs`` is ``"robot"`` (agent 0 against everyone else) or ``"all"``.
    """
    S, n, _ = positions.shape
    best = np.inf
    closing = None
    collide_dist = 2 * body_radius
    for k in range(S):
        p = positions[k]
        if pairs == "robot":
            cand = [(0, j) for j in range(1, n)]
        else:
            cand = [(i, j) for i in range(n) for j in range(i + 1, n)]
        for i, j in cand:
            if not (active[k, i] and active[k, j]):
                continue
            d = float(np.hypot(*(p[i] - p[j])))
            if d < best:
                best = d
                if d < collide_dist and k > 0 and closing is None:
                    closing = _closing_agent(positions[k - 1], p, ids, (i, j))
    step = np.linalg.norm(np.diff(positions, axis=0), axis=-1)
    lengths = [float(v) for v in step.sum(axis=0)] if S > 1 else [0.0] * n
    ttg = [r for r in reached_at]
    froze = timeout_hit or any(r is None for r in ttg)
    time_to_goal = float(max(ttg)) if not froze else float("nan")
    collided = best < collide_dist
    return Metrics(
        safety_distance=float(best),
        collided=bool(collided),
        path_lengths=lengths,
        time_to_goal=time_to_goal,
        max_path_length=float(max(lengths)),
        froze=bool(froze),
        closing_agent=closing if collided else None,
    )


def _step_seed(seed: int, k: int) -> int:
    return int(np.random.SeedSequence([seed, k]).generate_state(1)[0])


@dataclass(frozen=True)
class Planner:
    config: PlannerConfig = field(default_factory=PlannerConfig)
    params: RiskParams = field(default_factory=RiskParams)
    solve_config: SolveConfig = field(default_factory=SolveConfig)
    seed: int = 0


def _initial_heading(start, goal):
    d = np.asarray(goal) - np.asarray(start)
    return math.atan2(d[1], d[0])


def run_episode(
    scenario: Scenario,
    planner: Planner,
    pedestrian_model,
    config: ScenarioConfig,
    stop_on_collision: bool = False,
    record_plans: bool = True,
) -> EpisodeTrace:
    """Robot (agent 0) navigates among pedestrians (agents 1..).

    Runs observe, plan, step until the robot reaches its goal, a collision
    (if ``stop_on_collision``) or the timeout. A planner exception ends the
    episode and marks it frozen.
    """
    pc = planner.config
    dt = config.control_dt
    start, goal = scenario.starts[0], scenario.goals[0]
    if isinstance(pedestrian_model, PlaybackPedestrians):
        ped0, act0 = pedestrian_model.frame(0)
        ped_goals = pedestrian_model.frames[-1].copy()
    else:
        ped0, act0 = scenario.starts[1:], np.ones(len(scenario.starts) - 1, dtype=bool)
        ped_goals = scenario.goals[1:]
    P = ped0.shape[0]
    state = WorldState(
        t=0.0,
        robot_pose=np.array([start[0], start[1], _initial_heading(start, goal)]),
        robot_speed=0.0,
        ped_pos=np.array(ped0, dtype=float),
        ped_vel=np.zeros((P, 2)),
        ped_goals=np.array(ped_goals, dtype=float),
        ped_active=np.array(act0, dtype=bool),
    )
    ids = list(range(P + 1))
    trace = EpisodeTrace("crowdnav", planner.seed, dt, ids)
    replan_every = max(1, int(round(pc.replan_period / dt)))
    max_steps = int(round(config.episode_timeout / dt))
    positions = [np.vstack([state.robot_pose[None, :2], state.ped_pos])]
    actives = [np.concatenate([[True], state.ped_active])]
    reached_at = None
    plan = None
    plan_t = 0.0
    crashed = False
    for k in range(max_steps):
        rec = StepRecord(
            t=state.t,
            positions=positions[-1].tolist(),
            velocities=np.vstack([state.robot_velocity[None], state.ped_vel]).tolist(),
        )
        if np.hypot(*(state.robot_pose[:2] - goal)) <= pc.goal_tolerance:
            reached_at = state.t
            trace.steps.append(rec)
            break
        if k % replan_every == 0:
            robot_obs = AgentObservation(tuple(state.robot_pose[:2]), tuple(state.robot_velocity), 0)
            peds = [
                AgentObservation(tuple(state.ped_pos[j]), tuple(state.ped_vel[j]), j + 1)
                for j in range(P)
                if state.ped_active[j]
            ]
            t0 = time.perf_counter()
            try:
                out = plan_step(robot_obs, peds, goal, pc, planner.params,
                                _step_seed(planner.seed, k), planner.solve_config)
            except Exception as exc:  # the planner must never take down the run
                log.warning("planner raised at step %d: %s", k, exc)
                crashed = True
                trace.steps.append(rec)
                break
            rec.solve_time = time.perf_counter() - t0
            plan, plan_t = out.trajectory, state.t
            rec.fallback = out.fallback
            if record_plans:
                rec.planned = plan.points.tolist()
            if out.result is not None:
                rec.free_energy = list(out.result.free_energy_trace)
                rec.iterations = out.result.iterations_used
        cmd = track(plan, state.robot_pose, pc, elapsed=state.t - plan_t)
        trace.steps.append(rec)
        state = step_world(state, dt, cmd, pedestrian_model)
        positions.append(np.vstack([state.robot_pose[None, :2], state.ped_pos]))
        actives.append(np.concatenate([[True], state.ped_active]))
        if stop_on_collision and _robot_collides(positions[-1], actives[-1], config.body_radius):
            break
    timeout_hit = reached_at is None
    trace.metrics = compute_metrics(
        np.array(positions), np.array(actives), [reached_at], config.body_radius, "robot", ids,
        timeout_hit or crashed,
    )
    return trace


def _robot_collides(pos, act, body_radius):
    d = np.linalg.norm(pos[1:] - pos[0], axis=1)
    return bool(np.any((d < 2 * body_radius) & act[1:]))


def run_multiagent_episode(
    scenario: Scenario,
    planner: Planner,
    config: ScenarioConfig,
    record_plans: bool = False,
) -> EpisodeTrace:
    """Every agent plans with one joint solve per replan and tracks its own plan.

    Agents are holonomic: each moves toward its plan's lookahead point at the
    speed needed to be there on time, capped at ``max_linear_speed``. An agent
    within ``goal_tolerance`` of its goal has finished: it leaves the game and
    no longer counts for the safety distance.
    """
    pc = planner.config
    dt = config.control_dt
    pos = np.array(scenario.starts, dtype=float)
    goals = np.array(scenario.goals, dtype=float)
    n = pos.shape[0]
    vel = np.zeros_like(pos)
    trace = EpisodeTrace("multiagent", planner.seed, dt, list(range(n)))
    replan_every = max(1, int(round(pc.replan_period / dt)))
    max_steps = int(round(config.episode_timeout / dt))
    positions = [pos.copy()]
    actives = [np.ones(n, dtype=bool)]
    reached_at: list[float | None] = [None] * n
    plans: dict[int, Trajectory] = {}
    plan_t = 0.0
    t = 0.0
    crashed = False

    def arrive():
        for i in range(n):
            if reached_at[i] is None and np.hypot(*(pos[i] - goals[i])) <= pc.goal_tolerance:
                reached_at[i] = t

    for k in range(max_steps):
        arrive()
        active = np.array([r is None for r in reached_at])
        actives[-1] = active
        rec = StepRecord(t=t, positions=pos.tolist(), velocities=vel.tolist())
        if not active.any():
            trace.steps.append(rec)
            break
        if k % replan_every == 0:
            idx = np.flatnonzero(active)
            t0 = time.perf_counter()
            try:
                if idx.size == 1:
                    i = int(idx[0])
                    plans = {i: robot_mean(pos[i], goals[i], pc.nominal_speed, pc.grid)}
                else:
                    trajs, res = plan_joint(pos[idx], goals[idx], pc, planner.params,
                                            _step_seed(planner.seed, k), planner.solve_config)
                    plans = {int(i): p for i, p in zip(idx, trajs)}
                    rec.free_energy = list(res.free_energy_trace)
                    rec.iterations = res.iterations_used
            except Exception as exc:
                log.warning("joint planner raised at step %d: %s", k, exc)
                crashed = True
                trace.steps.append(rec)
                break
            plan_t = t
            rec.solve_time = time.perf_counter() - t0
            if record_plans:
                rec.planned = [plans[i].points.tolist() if i in plans else None for i in range(n)]
        trace.steps.append(rec)
        vel = np.zeros_like(pos)
        for i in np.flatnonzero(active):
            target, horizon = lookahead_point(plans[int(i)], t - plan_t, pc)
            if horizon <= 0:
                continue
            v = (target - pos[i]) / horizon
            s = float(np.hypot(*v))
            if s > pc.max_linear_speed:
                v *= pc.max_linear_speed / s
            vel[i] = v
        pos = pos + vel * dt
        t += dt
        positions.append(pos.copy())
        actives.append(active.copy())
    else:
        arrive()
    arr = np.array(positions)
    trace.metrics = compute_metrics(
        arr, np.array(actives), reached_at, config.body_radius, "all",
        trace.agent_ids, crashed or any(r is None for r in reached_at),
    )
    return trace
