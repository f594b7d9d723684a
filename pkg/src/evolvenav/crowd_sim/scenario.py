"""Random group-aware scenarios in a square arena centred on the origin."""
from __future__ import annotations

import numpy as np

from .types import ObstacleSpec, RobotState, ScenarioConfig, ScenarioError, SimWorld

_SIDES = ("left", "bottom", "right", "top")


def _group_circle_radius(size: int, max_radius: float) -> float:
    # room for `size` discs of the largest radius without crowding
    return max_radius * (1.0 + 0.9 * np.sqrt(size)) + 0.1


def _nearest_side(p: np.ndarray, half: float) -> int:
    gaps = [p[0] + half, p[1] + half, half - p[0], half - p[1]]
    return int(np.argmin(gaps))


def _point_on_side(side: int, t: float, half: float, inset: float) -> np.ndarray:
    lo, hi = -half + inset, half - inset
    along = lo + t * (hi - lo)
    return {
        0: np.array([lo, along]),
        1: np.array([along, lo]),
        2: np.array([hi, along]),
        3: np.array([along, hi]),
    }[side]


def sample_group_destination(rng: np.random.Generator, center: np.ndarray, half: float,
                             inset: float = 0.8) -> np.ndarray:
    """A point on a side neighbouring or opposite the side nearest ``center``."""
    home = _nearest_side(center, half)
    side = (home + int(rng.integers(1, 4))) % 4
    return _point_on_side(side, float(rng.random()), half, inset)


def init_scenario(config: ScenarioConfig, seed: int | None = None) -> SimWorld:
    config.validate()
    rng = np.random.default_rng(config.rng_seed if seed is None else seed)
    half = config.arena_side / 2.0
    cap = config.max_placement_attempts
    r_lo, r_hi = config.radius_range

    sizes = [int(rng.integers(config.group_size_range[0], config.group_size_range[1] + 1))
             for _ in range(config.n_groups)]
    circles: list[tuple[np.ndarray, float]] = []
    for size in sizes:
        rad = _group_circle_radius(size, r_hi)
        if rad >= half:
            raise ScenarioError(f"a group circle of radius {rad:.2f} m does not fit the arena")
        for _ in range(cap):
            c = rng.uniform(-half + rad, half - rad, size=2)
            if all(np.linalg.norm(c - c2) > rad + r2 for c2, r2 in circles):
                circles.append((c, rad))
                break
        else:
            raise ScenarioError(f"could not place group circle after {cap} attempts")

    positions, radii, v_max, group_ids, offsets = [], [], [], [], []
    group_goals = []
    for g, (size, (c, rad)) in enumerate(zip(sizes, circles)):
        speed = rng.uniform(*config.v_max_range)
        dest = sample_group_destination(rng, c, half)
        group_goals.append(dest)
        placed = _place_members(rng, c, rad, size, r_lo, r_hi, 2 * config.safety_margin, cap)
        if placed is None:
            raise ScenarioError(f"could not place members of group {g} after {cap} attempts")
        for p, rho in placed:
            positions.append(p)
            radii.append(rho)
            v_max.append(speed)
            group_ids.append(g)
            offsets.append(p - c)

    positions_a = np.array(positions, dtype=float).reshape(-1, 2)
    offsets_a = np.array(offsets, dtype=float).reshape(-1, 2)
    group_goals_a = np.array(group_goals, dtype=float).reshape(-1, 2)
    group_ids_a = np.array(group_ids, dtype=int)
    radii_a = np.array(radii, dtype=float)
    goals = _member_goals(group_goals_a, group_ids_a, offsets_a, half)

    o_lo, o_hi = config.obstacle_counts()
    n_obst = int(rng.integers(o_lo, o_hi + 1)) if o_hi > 0 else 0
    obstacles: list[ObstacleSpec] = []
    for _ in range(n_obst):
        ro = rng.uniform(*config.obstacle_radius_range)
        for _ in range(cap):
            ang, dist = rng.uniform(0, 2 * np.pi), np.sqrt(rng.random()) * config.obstacle_disk_radius
            c = dist * np.array([np.cos(ang), np.sin(ang)])
            clear_groups = all(np.linalg.norm(c - gc) > ro + gr for gc, gr in circles)
            clear_obst = all(np.hypot(c[0] - o.center[0], c[1] - o.center[1]) > ro + o.radius + 0.2
                             for o in obstacles)
            if clear_groups and clear_obst:
                obstacles.append(ObstacleSpec((float(c[0]), float(c[1])), float(ro)))
                break
        else:
            raise ScenarioError(f"could not place obstacle after {cap} attempts")

    robot = None
    if config.with_robot:
        robot = _place_robot(config, rng, positions_a, radii_a, obstacles, half, cap)

    return SimWorld(
        positions=positions_a,
        velocities=np.zeros_like(positions_a),
        goals=goals,
        radii=radii_a,
        v_max=np.array(v_max, dtype=float),
        group_ids=group_ids_a,
        obstacles=obstacles,
        robot=robot,
        config=config,
        time_step=0,
        group_goals=group_goals_a,
        goal_offsets=offsets_a,
        rng_state=rng.bit_generator.state,
    )


def _place_members(rng: np.random.Generator, center: np.ndarray, rad: float, size: int,
                   r_lo: float, r_hi: float, gap: float, cap: int,
                   ) -> list[tuple[np.ndarray, float]] | None:
    """Non-overlapping discs inside the group circle; restarts the group on dead ends."""
    attempts = 0
    while attempts < cap:
        placed: list[tuple[np.ndarray, float]] = []
        for _ in range(size):
            rho = rng.uniform(r_lo, r_hi)
            for _ in range(100):
                attempts += 1
                ang, dist = rng.uniform(0, 2 * np.pi), np.sqrt(rng.random()) * (rad - rho)
                p = center + dist * np.array([np.cos(ang), np.sin(ang)])
                if all(np.linalg.norm(p - q) > rho + rq + gap for q, rq in placed):
                    placed.append((p, rho))
                    break
            else:
                break
        if len(placed) == size:
            return placed
    return None


def _member_goals(group_goals: np.ndarray, group_ids: np.ndarray, offsets: np.ndarray,
                  half: float) -> np.ndarray:
    if len(group_ids) == 0:
        return np.zeros((0, 2))
    return np.clip(group_goals[group_ids] + offsets, -half + 0.3, half - 0.3)


def _place_robot(config: ScenarioConfig, rng: np.random.Generator, positions: np.ndarray,
                 radii: np.ndarray, obstacles: list[ObstacleSpec], half: float, cap: int) -> RobotState:
    rr = config.robot_radius
    lim = half - rr

    def clear(p: np.ndarray, margin: float) -> bool:
        if len(positions) and np.any(np.linalg.norm(positions - p, axis=1) <= radii + rr + margin):
            return False
        return all(np.hypot(p[0] - o.center[0], p[1] - o.center[1]) > o.radius + rr + margin
                   for o in obstacles)

    for _ in range(cap):
        start = rng.uniform(-lim, lim, size=2)
        goal = rng.uniform(-lim, lim, size=2)
        if np.linalg.norm(start - goal) < config.robot_min_separation:
            continue
        if clear(start, 0.1) and all(np.hypot(goal[0] - o.center[0], goal[1] - o.center[1]) > o.radius + rr
                                     for o in obstacles):
            return RobotState(position=start, velocity=np.zeros(2), goal=goal,
                              v_max=config.robot_v_max, radius=rr,
                              sensor_range=config.robot_sensor_range)
    raise ScenarioError(f"could not place robot after {cap} attempts")
