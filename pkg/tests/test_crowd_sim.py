import numpy as np
import pytest
from dataclasses import replace
from hypothesis import given, settings, strategies as st

from evolvenav.crowd_sim import (Episode, ObstacleSpec, RobotState, ScenarioConfig, ScenarioError, SimWorld,
                                 generate_dataset, init_scenario, make_group_scenes, orca_velocities,
                                 parse_episode, read_episode, simulate_episode, step_world, write_episode)
from evolvenav.crowd_sim.episode_io import format_episode


def min_gap(pos, radii):
    """All-pairs oracle: smallest centre distance minus sum of radii."""
    best = np.inf
    for i in range(len(pos)):
        for j in range(i + 1, len(pos)):
            best = min(best, np.hypot(*(pos[i] - pos[j])) - radii[i] - radii[j])
    return best


def test_pedestrian_count_range():
    for seed in range(50):
        w = init_scenario(ScenarioConfig(), seed)
        assert 10 <= w.n_pedestrians <= 25
        assert len(np.unique(w.group_ids)) == 5


def test_init_is_deterministic():
    a, b = init_scenario(ScenarioConfig(), 7), init_scenario(ScenarioConfig(), 7)
    for f in ("positions", "velocities", "goals", "radii", "v_max", "group_ids"):
        assert np.array_equal(getattr(a, f), getattr(b, f))
    assert np.array_equal(a.robot.position, b.robot.position)
    assert np.array_equal(a.obstacle_array(), b.obstacle_array())


def test_robot_start_goal_separation():
    cfg = ScenarioConfig()
    for seed in range(1000):
        w = init_scenario(cfg, seed)
        assert np.linalg.norm(w.robot.position - w.robot.goal) >= 10.0


def test_sampled_ranges_and_geometry():
    for seed in range(100):
        w = init_scenario(ScenarioConfig(), seed)
        assert np.all((w.radii >= 0.3) & (w.radii <= 0.5))
        assert np.all((w.v_max >= 0.5) & (w.v_max <= 1.5))
        obst = w.obstacle_array()
        assert 1 <= len(obst) <= 5
        assert np.all((obst[:, 2] >= 0.6) & (obst[:, 2] <= 1.0))
        assert np.all(np.linalg.norm(obst[:, :2], axis=1) <= 6.0)
        for g in np.unique(w.group_ids):
            goals = w.goals[w.group_ids == g]
            vmax = w.v_max[w.group_ids == g]
            assert np.all(vmax == vmax[0])
            assert 2 <= len(goals) <= 5
        assert min_gap(w.positions, w.radii) >= 0


def test_placement_failure_raises():
    cfg = ScenarioConfig(arena_side=5.0, n_groups=5, robot_min_separation=1.0, max_placement_attempts=50)
    with pytest.raises(ScenarioError, match="50 attempts"):
        init_scenario(cfg, 0)
    with pytest.raises(ScenarioError):
        init_scenario(replace(cfg, arena_side=3.0), 0)


def test_single_pedestrian_moves_straight_to_goal():
    pos = np.array([[0.0, 0.0]])
    goal = np.array([[3.0, 4.0]])
    pref = (goal - pos) / 5.0 * 1.2
    v = orca_velocities(pos, np.zeros((1, 2)), np.array([0.3]), np.array([1.2]), pref, np.zeros((0, 3)), 0.25)
    assert np.allclose(v[0], [0.72, 0.96])


def test_head_on_agents_mirror_symmetric():
    pos = np.array([[-2.0, 0.0], [2.0, 0.0]])
    pref = np.array([[1.0, 0.0], [-1.0, 0.0]])
    v = orca_velocities(pos, pref.copy(), np.array([0.4, 0.4]), np.array([1.0, 1.0]), pref,
                        np.zeros((0, 3)), 0.25)
    # point reflection through the midpoint maps one agent onto the other
    assert np.allclose(v[0], -v[1], atol=1e-12)


def _random_crowd(seed, n=20):
    rng = np.random.default_rng(seed)
    cfg = ScenarioConfig(n_groups=0, obstacle_count_range=(0, 0), with_robot=False)
    pos = []
    while len(pos) < n:
        p = rng.uniform(-6, 6, 2)
        if all(np.linalg.norm(p - q) > 1.1 for q in pos):
            pos.append(p)
    pos = np.array(pos)
    return SimWorld(pos, np.zeros((n, 2)), -pos + rng.normal(0, 0.5, (n, 2)), rng.uniform(0.3, 0.5, n),
                    rng.uniform(0.5, 1.5, n), np.arange(n), [], None, cfg)


def test_random_agents_never_interpenetrate():
    w = _random_crowd(0)
    for _ in range(200):
        w = step_world(w)
        assert min_gap(w.positions, w.radii) >= -1e-6
        assert np.all(np.linalg.norm(w.velocities, axis=1) <= w.v_max + 1e-9)


def _world_with_robot():
    cfg = ScenarioConfig(n_groups=0, obstacle_count_range=(0, 0))
    robot = RobotState(np.zeros(2), np.zeros(2), np.array([10.0, 0.0]))
    return SimWorld(np.zeros((0, 2)), np.zeros((0, 2)), np.zeros((0, 2)), np.zeros(0), np.zeros(0),
                    np.zeros(0, int), [], robot, cfg)


def test_zero_action_keeps_robot():
    w = step_world(_world_with_robot(), np.zeros(2))
    assert np.array_equal(w.robot.position, np.zeros(2))


def test_action_clamped_to_robot_speed_and_euler_step():
    w = step_world(_world_with_robot(), np.array([2.0, 0.0]))
    assert np.allclose(w.robot.velocity, [1.0, 0.0])
    assert np.allclose(w.robot.position, [0.25, 0.0])


def test_invisible_robot_is_ignored_by_pedestrians():
    base = _world_with_robot()
    cfg = replace(base.config, robot_visible=False)
    w = SimWorld(np.array([[1.5, 0.0]]), np.zeros((1, 2)), np.array([[-5.0, 0.0]]), np.array([0.3]),
                 np.array([1.0]), np.array([0]), [], base.robot, cfg)
    v = step_world(w).velocities[0]
    assert np.allclose(v, [-1.0, 0.0])
    seen = step_world(replace(w, config=replace(cfg, robot_visible=True))).velocities[0]
    assert not np.allclose(seen, [-1.0, 0.0])


def test_pedestrian_stops_at_goal():
    cfg = ScenarioConfig(n_groups=0, obstacle_count_range=(0, 0), with_robot=False)
    w = SimWorld(np.array([[0.0, 0.0]]), np.zeros((1, 2)), np.array([[0.5, 0.0]]), np.array([0.3]),
                 np.array([1.0]), np.array([0]), [], None, cfg)
    for _ in range(10):
        w = step_world(w)
    assert np.allclose(w.positions[0], [0.5, 0.0], atol=1e-9)
    assert np.allclose(w.velocities[0], 0.0)


def test_dataset_roundtrip(tmp_path):
    cfg = ScenarioConfig(max_episode_steps=20)
    written = generate_dataset(cfg, (2, 1, 1), tmp_path, seed=3)
    files = sorted(tmp_path.rglob("*.txt"))
    assert len(files) == 4 and {k: len(v) for k, v in written.items()} == {"train": 2, "val": 1, "test": 1}
    for split, paths in written.items():
        for k, p in enumerate(paths):
            ep = read_episode(p)
            assert np.unique(ep.group_ids).tolist() == list(range(len(np.unique(ep.group_ids))))
            assert format_episode(ep) == p.read_text()


def test_dataset_determinism(tmp_path):
    cfg = ScenarioConfig(max_episode_steps=10)
    generate_dataset(cfg, (1, 0, 0), tmp_path / "a", seed=5)
    generate_dataset(cfg, (1, 0, 0), tmp_path / "b", seed=5)
    a = (tmp_path / "a" / "train" / "episode_00000.txt").read_bytes()
    b = (tmp_path / "b" / "train" / "episode_00000.txt").read_bytes()
    assert a == b


def test_episode_text_format():
    ep = Episode(np.arange(8, dtype=float).reshape(2, 2, 2), 0.25, np.array([0, 1]),
                 np.array([[1.0, 2.0, 0.7]]))
    text = format_episode(ep)
    assert text.splitlines()[0].split() == ["2", "2", "0.25"]
    assert "#OBST 1.0 2.0 0.7" in text
    assert parse_episode(text) == ep


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_episode_speed_bound_and_safety(seed):
    ep = simulate_episode(ScenarioConfig(max_episode_steps=30), seed)
    w = init_scenario(replace(ScenarioConfig(), with_robot=False), seed)
    disp = np.linalg.norm(np.diff(ep.positions, axis=1), axis=-1) / ep.dt
    assert np.all(disp <= w.v_max[:, None] + 1e-9)
    for t in range(ep.n_steps):
        assert min_gap(ep.positions[:, t], w.radii) >= -1e-6


def test_group_scenes_shape():
    eps = make_group_scenes(3, n_steps=9, seed=0)
    assert len(eps) == 3
    assert eps[0].positions.shape == (6, 9, 2)
    assert eps[0].group_ids.tolist() == [0, 0, 0, 1, 1, 1]
