import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from brne.strategy import (
    AgentObservation,
    DegenerateWeightsError,
    GridMismatchError,
    SampledMixedStrategy,
    TimeGrid,
    Trajectory,
    check_same_grid,
    min_pairwise_distance,
    normalize_weights,
    weighted_mean_trajectory,
)

GRID = TimeGrid(5, 0.2)


def test_grid_times_and_horizon():
    np.testing.assert_allclose(GRID.times, [0.0, 0.2, 0.4, 0.6, 0.8])
    assert GRID.horizon == pytest.approx(1.0)


@pytest.mark.parametrize("T,dt", [(1, 0.1), (5, 0.0), (5, -1.0), (2.5, 0.1)])
def test_grid_rejects_bad_values(T, dt):
    with pytest.raises(ValueError):
        TimeGrid(T, dt)


def test_trajectory_is_read_only_copy():
    pts = np.zeros((5, 2))
    tr = Trajectory(pts, GRID)
    pts[0, 0] = 1.0
    assert tr.points[0, 0] == 0.0
    with pytest.raises(ValueError):
        tr.points[0, 0] = 2.0


def test_trajectory_shape_and_finiteness():
    with pytest.raises(ValueError):
        Trajectory(np.zeros((4, 2)), GRID)
    bad = np.zeros((5, 2))
    bad[2, 1] = np.nan
    with pytest.raises(ValueError):
        Trajectory(bad, GRID)


def test_grid_mismatch():
    with pytest.raises(GridMismatchError):
        check_same_grid(GRID, TimeGrid(5, 0.1))
    a = Trajectory(np.zeros((5, 2)), GRID)
    b = Trajectory(np.zeros((6, 2)), TimeGrid(6, 0.2))
    with pytest.raises(GridMismatchError):
        min_pairwise_distance(a, b)


def test_normalize_examples():
    np.testing.assert_allclose(normalize_weights([1, 1, 2]), [0.75, 0.75, 1.5])
    np.testing.assert_array_equal(normalize_weights([0, 0, 3]), [0, 0, 3])
    for bad in ([0, 0, 0], [1, -1], [1, np.inf], [1, np.nan], []):
        with pytest.raises(DegenerateWeightsError):
            normalize_weights(bad)


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, st.integers(1, 50), elements=st.floats(0, 1e6)).filter(lambda w: w.sum() > 0))
def test_normalize_mean_one_and_proportional(w):
    n = normalize_weights(w)
    assert np.mean(n) == pytest.approx(1.0, rel=1e-12)
    assert np.all(n >= 0)
    i = int(np.argmax(w))
    np.testing.assert_allclose(n * w[i], w * n[i], rtol=1e-12, atol=1e-300)


def test_weighted_mean_uniform_is_sample_mean():
    rng = np.random.default_rng(0)
    s = rng.normal(size=(7, 5, 2))
    strat = SampledMixedStrategy(s, np.ones(7), GRID)
    np.testing.assert_allclose(weighted_mean_trajectory(strat).points, s.mean(axis=0), atol=1e-14)


def test_weighted_mean_point_mass():
    rng = np.random.default_rng(1)
    s = rng.normal(size=(4, 5, 2))
    strat = SampledMixedStrategy(s, [0.0, 4.0, 0.0, 0.0], GRID)
    np.testing.assert_allclose(weighted_mean_trajectory(strat).points, s[1])


def test_min_pairwise_distance_hand_example():
    a = Trajectory(np.zeros((5, 2)), GRID)
    b_pts = np.array([[3, 4], [1, 0], [0, 2], [5, 5], [0, 0.5]], dtype=float)
    assert min_pairwise_distance(a, Trajectory(b_pts, GRID)) == pytest.approx(0.5)


def test_sampled_strategy_validation():
    with pytest.raises(ValueError):
        SampledMixedStrategy(np.zeros((3, 4, 2)), np.ones(3), GRID)
    with pytest.raises(ValueError):
        SampledMixedStrategy(np.zeros((3, 5, 2)), np.ones(2), GRID)
    with pytest.raises(DegenerateWeightsError):
        SampledMixedStrategy(np.zeros((3, 5, 2)), [1, -1, 1], GRID)


def test_effective_sample_size():
    s = np.zeros((4, 5, 2))
    assert SampledMixedStrategy(s, np.ones(4), GRID).effective_sample_size() == pytest.approx(4)
    assert SampledMixedStrategy(s, [4, 0, 0, 0], GRID).effective_sample_size() == pytest.approx(1)


def test_observation():
    o = AgentObservation((1, 2), (3, 4), 7)
    assert o.speed == pytest.approx(5.0)
    with pytest.raises(ValueError):
        AgentObservation((1, 2, 3), (0, 0))
