import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from brne.nav import PlannerConfig, RobotCommand
from brne.risk import RiskParams
from brne.sim import (
    InfeasibleScenarioError,
    PlaybackParseError,
    Planner,
    Scenario,
    ScenarioConfig,
    ScriptedPedestrians,
    SocialForcePedestrians,
    WorldState,
    compute_metrics,
    integrate_unicycle,
    load_playback,
    make_scenario,
    run_episode,
    run_multiagent_episode,
    sample_circle_scenario,
    step_world,
)

FAST = PlannerConfig(horizon_steps=10, samples_per_agent=40)


def world(ped_pos, ped_goals, pose=(0.0, 0.0, 0.0)):
    ped_pos = np.asarray(ped_pos, dtype=float)
    return WorldState(0.0, np.array(pose, dtype=float), 0.0, ped_pos, np.zeros_like(ped_pos),
                      np.asarray(ped_goals, dtype=float), np.ones(len(ped_pos), dtype=bool))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 8), st.integers(0, 10**6))
def test_circle_scenario_constraints(n, seed):
    cfg = ScenarioConfig(n_agents=n, rng_seed=seed)
    sc = sample_circle_scenario(cfg)
    np.testing.assert_allclose(np.linalg.norm(sc.starts, axis=1), cfg.circle_radius)
    np.testing.assert_array_equal(sc.goals, -sc.starts)
    d = np.linalg.norm(sc.starts[:, None] - sc.starts[None], axis=-1)
    assert np.all(d[np.triu_indices(n, 1)] >= cfg.min_spawn_separation)
    again = sample_circle_scenario(cfg)
    np.testing.assert_array_equal(again.starts, sc.starts)


def test_infeasible_packing():
    with pytest.raises(InfeasibleScenarioError):
        sample_circle_scenario(ScenarioConfig(n_agents=40, circle_radius=3.0, min_spawn_separation=0.6))


def test_hallway_scenario_inside_walls():
    cfg = ScenarioConfig(kind="hallway", n_agents=6, rng_seed=2)
    sc = make_scenario(cfg)
    half_w = cfg.hallway_width / 2
    assert np.all(np.abs(sc.starts[:, 1]) <= half_w) and np.all(np.abs(sc.goals[:, 1]) <= half_w)
    assert np.all(np.sign(sc.starts[:, 0]) == -np.sign(sc.goals[:, 0]))


def test_unicycle_integration():
    np.testing.assert_allclose(integrate_unicycle((0, 0, 0), RobotCommand(1.0, 0.0), 0.5), [0.5, 0, 0])
    # quarter turn on a unit circle
    p = integrate_unicycle((0, 0, 0), RobotCommand(1.0, 1.0), math.pi / 2)
    np.testing.assert_allclose(p, [1.0, 1.0, math.pi / 2], atol=1e-12)
    # many small straight-line steps converge to the exact arc
    q = np.array([0.0, 0.0, 0.0])
    for _ in range(20000):
        q = q + 1e-4 * np.array([math.cos(q[2]), math.sin(q[2]), 0.7])
    np.testing.assert_allclose(integrate_unicycle((0, 0, 0), RobotCommand(1.0, 0.7), 2.0), q, atol=1e-3)


def test_step_world_zero_command_scripted():
    s = world([[5.0, 0.0], [0.0, 5.0]], [[0.0, 0.0], [0.0, 10.0]])
    nxt = step_world(s, 0.1, RobotCommand(0.0, 0.0), ScriptedPedestrians(1.2))
    np.testing.assert_array_equal(nxt.robot_pose, s.robot_pose)
    np.testing.assert_allclose(nxt.ped_pos, [[4.88, 0.0], [0.0, 5.12]])
    assert nxt.step == 1 and nxt.t == pytest.approx(0.1)


def test_scripted_stops_at_goal():
    s = world([[0.05, 0.0]], [[0.0, 0.0]])
    nxt = step_world(s, 0.1, RobotCommand(0.0, 0.0), ScriptedPedestrians(1.2))
    np.testing.assert_allclose(nxt.ped_pos, [[0.0, 0.0]], atol=1e-15)


def test_social_force_reaches_desired_speed():
    model = SocialForcePedestrians(react_to_robot=False)
    s = world([[0.0, 0.0]], [[100.0, 0.0]], pose=(0.0, -50.0, 0.0))
    for _ in range(100):
        s = step_world(s, 0.1, RobotCommand(0, 0), model)
    assert np.hypot(*s.ped_vel[0]) == pytest.approx(1.2, rel=0.01)
    assert abs(s.ped_vel[0, 1]) < 1e-12


def test_social_force_repels_and_caps_speed():
    model = SocialForcePedestrians()
    s = world([[0.0, 0.0], [0.5, 0.0]], [[-5.0, 0.0], [5.0, 0.0]], pose=(0.0, 0.4, 0.0))
    for _ in range(30):
        s = step_world(s, 0.1, RobotCommand(0, 0), model)
        assert np.all(np.linalg.norm(s.ped_vel, axis=1) <= model.max_speed_factor * 1.2 + 1e-12)
    assert s.ped_pos[1, 0] - s.ped_pos[0, 0] > 0.5


def _write(tmp_path, text):
    p = tmp_path / "tracks.csv"
    p.write_text(text, encoding="utf-8")
    return p


def test_playback_interpolation(tmp_path):
    pb = load_playback(_write(tmp_path, "agent_id,t_seconds,x_m,y_m\n0,0,0,0\n0,1,1,0\n"), 0.5)
    np.testing.assert_allclose(pb.frames[:, 0], [[0, 0], [0.5, 0], [1, 0]])


def test_playback_activity_window(tmp_path):
    pb = load_playback(_write(tmp_path, "agent_id,t_seconds,x_m,y_m\n0,0,0,0\n0,2,2,0\n1,1,5,5\n1,2,5,6\n"), 0.5)
    np.testing.assert_array_equal(pb.active[:, 1], [False, False, True, True, True])
    np.testing.assert_allclose(pb.frames[3, 1], [5.0, 5.5])


@pytest.mark.parametrize("text,line", [
    ("", None),
    ("agent_id,t_seconds,x_m,y_m\n", None),
    ("id,t,x,y\n0,0,0,0\n", 1),
    ("agent_id,t_seconds,x_m,y_m\n0,1,0,0\n0,0.5,1,0\n", 3),
    ("agent_id,t_seconds,x_m,y_m\n0,0,0,0\n0,1,abc,0\n", 3),
    ("agent_id,t_seconds,x_m,y_m\n0,0,0\n", 2),
])
def test_playback_errors(tmp_path, text, line):
    with pytest.raises(PlaybackParseError) as err:
        load_playback(_write(tmp_path, text), 0.1)
    if line is not None:
        assert f":{line}:" in str(err.value)


def test_playback_episode_positions_equal_file(tmp_path):
    rows = ["agent_id,t_seconds,x_m,y_m"]
    rows += [f"1,{t:.1f},{3 - t:.3f},0.8" for t in np.arange(0, 3.01, 0.5)]
    pb = load_playback(_write(tmp_path, "\n".join(rows) + "\n"), 0.1)
    sc = Scenario(np.array([[0.0, 0.0]]), np.array([[4.0, 0.0]]))
    tr = run_episode(sc, Planner(FAST, RiskParams(), seed=0), pb, ScenarioConfig(control_dt=0.1, episode_timeout=3))
    for k, step in enumerate(tr.steps):
        np.testing.assert_array_equal(np.array(step.positions[1:]), pb.frame(k)[0])


def test_metrics_by_hand():
    pos = np.array([[[0, 0], [2, 0], [0, 3]], [[0.5, 0], [1.0, 0], [0, 3]]], dtype=float)
    act = np.ones((2, 3), dtype=bool)
    m = compute_metrics(pos, act, [0.1, 0.1, 0.1], 0.3, "all", [0, 1, 2], False)
    assert m.safety_distance == pytest.approx(0.5) and m.collided
    assert m.closing_agent == 1
    np.testing.assert_allclose(m.path_lengths, [0.5, 1.0, 0.0])
    assert m.max_path_length == 1.0 and m.time_to_goal == pytest.approx(0.1) and not m.froze
    r = compute_metrics(pos, act, [None], 0.3, "robot", [0, 1, 2], True)
    assert r.froze and math.isnan(r.time_to_goal)


def test_inactive_agents_are_ignored():
    pos = np.array([[[0, 0], [0.1, 0]]], dtype=float)
    m = compute_metrics(pos, np.array([[True, False]]), [0.0], 0.3, "robot", [0, 1], False)
    assert m.safety_distance == np.inf and not m.collided


def test_empty_world_episode_straight():
    sc = Scenario(np.array([[0.0, 0.0]]), np.array([[5.0, 0.0]]))
    tr = run_episode(sc, Planner(FAST, RiskParams(), seed=0), ScriptedPedestrians(), ScenarioConfig())
    m = tr.metrics
    assert not m.froze and not m.collided
    assert m.path_lengths[0] <= 5.0 * 1.05
    assert len(tr.steps) * 0.1 == pytest.approx(tr.steps[-1].t + 0.1)


def test_unreachable_goal_freezes_at_timeout():
    sc = Scenario(np.array([[0.0, 0.0]]), np.array([[500.0, 0.0]]))
    cfg = ScenarioConfig(episode_timeout=2.0)
    tr = run_episode(sc, Planner(FAST, RiskParams(), seed=0), ScriptedPedestrians(), cfg)
    assert tr.metrics.froze
    assert len(tr.steps) == 20


def _recompute_safety(tr, pairs):
    P = np.array([s.positions for s in tr.steps])
    d = np.linalg.norm(P[:, :, None] - P[:, None], axis=-1)
    if pairs == "robot":
        return d[:, 0, 1:].min()
    n = P.shape[1]
    return min(d[:, i, j].min() for i in range(n) for j in range(i + 1, n))


def test_crowd_episode_metrics_consistent_and_reproducible(tmp_path):
    cfg = ScenarioConfig(n_agents=4, rng_seed=3, episode_timeout=15)
    sc = sample_circle_scenario(cfg)
    planner = Planner(FAST, RiskParams(), seed=3)
    a = run_episode(sc, planner, SocialForcePedestrians(), cfg, record_plans=False)
    b = run_episode(sc, planner, SocialForcePedestrians(), cfg, record_plans=False)
    # trace steps hold the pre-step state; the metrics also see the final state
    assert a.metrics.safety_distance <= _recompute_safety(a, "robot") + 1e-9
    assert a.metrics.collided == (a.metrics.safety_distance < 0.6)
    a.write_json(tmp_path / "a.json")
    b.write_json(tmp_path / "b.json")
    ja, jb = json.loads((tmp_path / "a.json").read_text()), json.loads((tmp_path / "b.json").read_text())
    for s in ja["steps"] + jb["steps"]:
        s["solve_time"] = None
    assert ja == jb
    assert ja["schema"] == "brne-trace/1"
    a.write_csv(tmp_path / "a.csv")
    assert (tmp_path / "a.csv").read_text().startswith("# schema brne-trace/1\n")


def test_multiagent_episode_metrics_consistent():
    cfg = ScenarioConfig(n_agents=3, rng_seed=1, episode_timeout=20)
    sc = sample_circle_scenario(cfg)
    tr = run_multiagent_episode(sc, Planner(FAST, RiskParams(), seed=1), cfg)
    P = np.array([s.positions for s in tr.steps])
    assert P.shape[1] == 3
    assert not tr.metrics.froze
    assert tr.metrics.collided == (tr.metrics.safety_distance < 0.6)
    assert all(pl >= 2 * cfg.circle_radius - 2 * FAST.goal_tolerance for pl in tr.metrics.path_lengths)
