import math

import numpy as np
import pytest

from brne.gp import robot_mean
from brne.nav import PlannerConfig, lookahead_point, plan_step, select_agents, track
from brne.risk import RiskParams
from brne.solver import SolveConfig
from brne.strategy import AgentObservation, Trajectory, weighted_mean_trajectory

PC = PlannerConfig()
P = RiskParams()


def straight(grid=PC.grid, speed=1.2):
    return Trajectory(np.stack([speed * grid.times, np.zeros(grid.horizon_steps)], axis=1), grid)


def test_config_validation():
    with pytest.raises(ValueError):
        PlannerConfig(replan_period=0.1, dt=0.2)
    with pytest.raises(ValueError):
        PlannerConfig(max_tracked_agents=0)


def test_track_aligned():
    cmd = track(straight(), (0.0, 0.0, 0.0), PC)
    assert cmd.angular == 0.0
    assert cmd.linear == pytest.approx(min(PC.nominal_speed, PC.max_linear_speed), rel=1e-9)


def test_track_left_turn_clamps():
    g = PC.grid
    plan = Trajectory(np.stack([np.zeros(g.horizon_steps), 1.2 * g.times], axis=1), g)
    cmd = track(plan, (0.0, 0.0, 0.0), PC)
    assert cmd.angular == PC.max_angular_speed
    assert cmd.linear == 0.0


def test_track_goal_hold():
    g = PC.grid
    plan = Trajectory(np.tile([3.0, 1.0], (g.horizon_steps, 1)), g)
    cmd = track(plan, (3.0, 1.0, 0.7), PC)
    assert cmd.linear == 0.0 and cmd.angular == 0.0


def test_track_respects_bounds():
    rng = np.random.default_rng(0)
    g = PC.grid
    for _ in range(50):
        plan = Trajectory(rng.normal(scale=5, size=(g.horizon_steps, 2)), g)
        cmd = track(plan, (*rng.normal(size=2), rng.uniform(-4, 4)), PC, elapsed=rng.uniform(0, 1))
        assert 0.0 <= cmd.linear <= PC.max_linear_speed
        assert abs(cmd.angular) <= PC.max_angular_speed


def test_lookahead_interpolates_and_saturates():
    pt, h = lookahead_point(straight(), 0.1, PC)
    np.testing.assert_allclose(pt, [1.2 * (0.1 + PC.lookahead_time), 0.0])
    assert h == pytest.approx(PC.lookahead_time)
    pt, h = lookahead_point(straight(), 100.0, PC)
    assert h < 0


def test_select_agents_nearest_first_with_id_ties():
    robot = AgentObservation((0, 0), (0, 0), 0)
    peds = [AgentObservation((0, 2), (0, 0), 5), AgentObservation((2, 0), (0, 0), 3),
            AgentObservation((1, 0), (0, 0), 9)]
    assert [o.agent_id for o in select_agents(robot, peds, 2)] == [9, 3]


def test_no_pedestrians_returns_nominal_mean():
    robot = AgentObservation((1.0, -2.0), (0.3, 0.0), 0)
    out = plan_step(robot, [], (5.0, 1.0), PC, P, seed=0)
    expect = robot_mean((1.0, -2.0), (5.0, 1.0), PC.nominal_speed, PC.grid)
    np.testing.assert_array_equal(out.trajectory.points, expect.points)
    assert out.result is None and not out.fallback


def _uniform_mean(out):
    return weighted_mean_trajectory(out.result.nominal_strategies[0]).points


def test_head_on_pedestrian_causes_sidestep():
    robot = AgentObservation((0.0, 0.0), (1.2, 0.0), 0)
    ped = AgentObservation((2.0, 0.0), (-1.2, 0.0), 1)
    out = plan_step(robot, [ped], (6.0, 0.0), PC, P, seed=3)
    lateral = np.abs(out.trajectory.points[:, 1]).max()
    # the nominal mean is the straight line; its sample estimate wobbles by a few cm
    assert lateral > np.abs(_uniform_mean(out)[:, 1]).max() + 0.1


def test_pedestrian_behind_moving_away_changes_nothing():
    robot = AgentObservation((0.0, 0.0), (1.2, 0.0), 0)
    ped = AgentObservation((-3.0, 0.0), (-1.2, 0.0), 1)
    out = plan_step(robot, [ped], (6.0, 0.0), PC, P, seed=4)
    # measured against the same samples unweighted, so Monte-Carlo noise cancels
    assert np.max(np.abs(out.trajectory.points - _uniform_mean(out))) < 0.05


def test_plan_step_deterministic_and_anchored():
    robot = AgentObservation((0.5, 0.2), (1.0, 0.1), 0)
    peds = [AgentObservation((3.0, 0.5 * k), (-1.0, 0.0), k) for k in range(1, 4)]
    a = plan_step(robot, peds, (6.0, 0.0), PC, P, seed=11)
    b = plan_step(robot, peds, (6.0, 0.0), PC, P, seed=11)
    np.testing.assert_array_equal(a.trajectory.points, b.trajectory.points)
    assert a.tracked_ids == (1, 2, 3)
    assert np.hypot(*(a.trajectory.points[0] - robot.position)) <= 3 * PC.start_std


def test_tracked_agents_capped():
    robot = AgentObservation((0.0, 0.0), (0.0, 0.0), 0)
    peds = [AgentObservation((2.0 + k, 3.0), (0.0, 0.0), k + 1) for k in range(8)]
    out = plan_step(robot, peds, (6.0, 0.0), PC, P, seed=0)
    assert out.tracked_ids == (1, 2, 3, 4, 5)
    assert len(out.result.strategies) == 6


def test_solver_failure_falls_back():
    robot = AgentObservation((0.0, 0.0), (0.0, 0.0), 0)
    ped = AgentObservation((0.1, 0.0), (0.0, 0.0), 1)
    huge = RiskParams(scale=1e4, steepness=5.0, aggregation="sum")
    out = plan_step(robot, [ped], (6.0, 0.0), PC, huge, seed=0, solve_config=SolveConfig(mode="rs"))
    assert out.fallback and out.result is None
    np.testing.assert_array_equal(out.trajectory.points,
                                  robot_mean((0, 0), (6, 0), PC.nominal_speed, PC.grid).points)


def test_empty_world_plans_approach_goal():
    goal = np.array([6.0, 2.0])
    pose = np.array([0.0, 0.0, 0.0])
    dists = []
    for k in range(30):
        plan = plan_step(AgentObservation(pose[:2], (0, 0)), [], goal, PC, P, seed=k).trajectory
        dists.append(np.hypot(*(plan.points[-1] - goal)))
        cmd = track(plan, pose, PC)
        pose = pose + PC.dt * np.array([cmd.linear * math.cos(pose[2]), cmd.linear * math.sin(pose[2]),
                                        cmd.angular])
    assert all(b <= a + 1e-12 for a, b in zip(dists, dists[1:]))
