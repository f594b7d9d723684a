from __future__ import annotations

import numpy as np

from .orca import orca_step
from .scenario import _member_goals, sample_group_destination
from .types import SimWorld


def clamp_speed(v: np.ndarray, v_max: float) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    speed = float(np.linalg.norm(v))
    if speed > v_max:
        return v * (v_max / speed)
    return v.copy()


def _overlapping(pos: np.ndarray, radii: np.ndarray, obstacles: np.ndarray,
                 tol: float) -> np.ndarray:
    n = len(pos)
    bad = np.zeros(n, dtype=bool)
    if n > 1:
        gap = np.linalg.norm(pos[:, None] - pos[None], axis=-1) - (radii[:, None] + radii[None])
        np.fill_diagonal(gap, np.inf)
        bad |= (gap < -tol).any(axis=1)
    if len(obstacles) and n:
        gap_o = np.linalg.norm(pos[:, None] - obstacles[None, :, :2], axis=-1) - obstacles[None, :, 2] - radii[:, None]
        bad |= (gap_o < -tol).any(axis=1)
    return bad


def guard_overlaps(positions: np.ndarray, velocities: np.ndarray, radii: np.ndarray,
                   obstacles: np.ndarray, dt: float, halvings: int = 6) -> np.ndarray:
    """Scale back pedestrian velocities whose Euler step would create an overlap.

    ORCA's infeasible-case fallback can leave small penetrations in dense jams.
    Offenders are slowed by halving, then stopped; stopping everyone reproduces
    the (overlap-free) current state, so the loop always terminates.
    """
    if len(positions) == 0:
        return velocities
    tol = 1e-9
    already = _overlapping(positions, radii, obstacles, tol)
    scale = np.ones(len(positions))
    for it in range(halvings + len(positions) + 1):
        bad = _overlapping(positions + velocities * scale[:, None] * dt, radii, obstacles, tol) & ~already
        if not bad.any():
            break
        scale[bad] = 0.0 if it >= halvings else scale[bad] * 0.5
    return velocities * scale[:, None]


def step_world(world: SimWorld, robot_action: np.ndarray | None = None,
               dt: float | None = None, ped_velocities: np.ndarray | None = None) -> SimWorld:
    """Advance the world by one holonomic Euler step.

    Pedestrian velocities come from ORCA unless ``ped_velocities`` is given.
    The robot action is clamped to the robot's speed limit.
    """
    dt = world.config.dt if dt is None else dt
    if dt <= 0:
        raise ValueError("dt must be positive")
    new = world.copy()
    vel = orca_step(world, dt) if ped_velocities is None else np.asarray(ped_velocities, float)
    vel = guard_overlaps(world.positions, vel, world.radii, world.obstacle_array(), dt)
    new.velocities = vel
    new.positions = world.positions + vel * dt
    if new.robot is not None:
        action = np.zeros(2) if robot_action is None else robot_action
        new.robot.velocity = clamp_speed(action, new.robot.v_max)
        new.robot.position = world.robot.position + new.robot.velocity * dt
    new.time_step = world.time_step + 1
    if world.config.on_goal == "respawn":
        _respawn_arrived_groups(new)
    return new


def _respawn_arrived_groups(world: SimWorld) -> None:
    cfg = world.config
    arrived = np.linalg.norm(world.goals - world.positions, axis=1) <= cfg.goal_tolerance
    if not arrived.any():
        return
    rng = np.random.default_rng()
    if world.rng_state is not None:
        rng.bit_generator.state = world.rng_state
    half = cfg.arena_side / 2.0
    for g in np.unique(world.group_ids):
        members = world.group_ids == g
        if arrived[members].all():
            center = world.positions[members].mean(axis=0)
            world.group_goals[g] = sample_group_destination(rng, center, half)
    world.goals = _member_goals(world.group_goals, world.group_ids, world.goal_offsets, half)
    world.rng_state = rng.bit_generator.state
