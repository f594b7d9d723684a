"""Optimal reciprocal collision avoidance for disc agents and circular obstacles.

Half-plane constraints are built for all agent pairs at once with numpy; the
incremental linear programs (2-D, with a 3-D fallback when infeasible) run per
agent on plain floats.
"""
from __future__ import annotations

import math

import numpy as np

from .types import SimWorld

EPS = 1e-5

Line = tuple[float, float, float, float]  # point x, point y, direction x, direction y


def _det(ax: float, ay: float, bx: float, by: float) -> float:
    return ax * by - ay * bx


def _lp1(lines: list[Line], no: int, radius: float, opt: tuple[float, float],
         direction_opt: bool) -> tuple[float, float] | None:
    px, py, dx, dy = lines[no]
    dot = px * dx + py * dy
    disc = dot * dot + radius * radius - (px * px + py * py)
    if disc < 0.0:
        return None
    sq = math.sqrt(disc)
    t_left = -dot - sq
    t_right = -dot + sq
    for i in range(no):
        qx, qy, ex, ey = lines[i]
        denom = _det(dx, dy, ex, ey)
        numer = _det(ex, ey, px - qx, py - qy)
        if abs(denom) <= EPS:
            if numer < 0.0:
                return None
            continue
        t = numer / denom
        if denom >= 0.0:
            t_right = min(t_right, t)
        else:
            t_left = max(t_left, t)
        if t_left > t_right:
            return None
    if direction_opt:
        t = t_right if opt[0] * dx + opt[1] * dy > 0.0 else t_left
    else:
        t = dx * (opt[0] - px) + dy * (opt[1] - py)
        t = min(max(t, t_left), t_right)
    return px + t * dx, py + t * dy


def _lp2(lines: list[Line], radius: float, opt: tuple[float, float], direction_opt: bool,
         ) -> tuple[int, tuple[float, float]]:
    ox, oy = opt
    if direction_opt:
        result = (ox * radius, oy * radius)
    elif ox * ox + oy * oy > radius * radius:
        n = math.hypot(ox, oy)
        result = (ox / n * radius, oy / n * radius)
    else:
        result = (ox, oy)
    for i, (px, py, dx, dy) in enumerate(lines):
        if _det(dx, dy, px - result[0], py - result[1]) > 0.0:
            new = _lp1(lines, i, radius, opt, direction_opt)
            if new is None:
                return i, result
            result = new
    return len(lines), result


def _lp3(lines: list[Line], n_obst: int, begin: int, radius: float,
         result: tuple[float, float]) -> tuple[float, float]:
    distance = 0.0
    for i in range(begin, len(lines)):
        px, py, dx, dy = lines[i]
        if _det(dx, dy, px - result[0], py - result[1]) <= distance:
            continue
        proj: list[Line] = list(lines[:n_obst])
        for j in range(n_obst, i):
            qx, qy, ex, ey = lines[j]
            determinant = _det(dx, dy, ex, ey)
            if abs(determinant) <= EPS:
                if dx * ex + dy * ey > 0.0:
                    continue
                lx, ly = 0.5 * (px + qx), 0.5 * (py + qy)
            else:
                s = _det(ex, ey, px - qx, py - qy) / determinant
                lx, ly = px + s * dx, py + s * dy
            nx, ny = ex - dx, ey - dy
            n = math.hypot(nx, ny)
            proj.append((lx, ly, nx / n, ny / n))
        fail, candidate = _lp2(proj, radius, (-dy, dx), True)
        if fail >= len(proj):
            result = candidate
        distance = _det(dx, dy, px - result[0], py - result[1])
    return result


def _half_planes(rel_pos: np.ndarray, rel_vel: np.ndarray, combined_radius: np.ndarray,
                 inv_horizon: float, inv_dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ORCA velocity-obstacle boundary: returns (u, direction) per pair."""
    dist_sq = np.einsum("...k,...k->...", rel_pos, rel_pos)
    r_sq = combined_radius ** 2
    rx, ry = rel_pos[..., 0], rel_pos[..., 1]

    w = rel_vel - inv_horizon * rel_pos
    w_len_sq = np.einsum("...k,...k->...", w, w)
    dot1 = np.einsum("...k,...k->...", w, rel_pos)
    cutoff = (dot1 < 0.0) & (dot1 ** 2 > r_sq * w_len_sq)

    w_len = np.sqrt(np.maximum(w_len_sq, 1e-300))
    unit_w = w / w_len[..., None]
    dir_cut = np.stack([unit_w[..., 1], -unit_w[..., 0]], axis=-1)
    u_cut = ((combined_radius * inv_horizon - w_len)[..., None]) * unit_w

    leg = np.sqrt(np.maximum(dist_sq - r_sq, 0.0))
    safe_dist_sq = np.maximum(dist_sq, 1e-300)
    left = (rx * w[..., 1] - ry * w[..., 0]) > 0.0
    dir_left = np.stack([rx * leg - ry * combined_radius, rx * combined_radius + ry * leg], -1)
    dir_right = -np.stack([rx * leg + ry * combined_radius, -rx * combined_radius + ry * leg], -1)
    dir_leg = np.where(left[..., None], dir_left, dir_right) / safe_dist_sq[..., None]
    dot2 = np.einsum("...k,...k->...", rel_vel, dir_leg)
    u_leg = dot2[..., None] * dir_leg - rel_vel

    # already colliding: resolve within one time step
    wc = rel_vel - inv_dt * rel_pos
    wc_len = np.sqrt(np.maximum(np.einsum("...k,...k->...", wc, wc), 1e-300))
    unit_wc = wc / wc_len[..., None]
    dir_col = np.stack([unit_wc[..., 1], -unit_wc[..., 0]], axis=-1)
    u_col = ((combined_radius * inv_dt - wc_len)[..., None]) * unit_wc

    apart = (dist_sq > r_sq)[..., None]
    u = np.where(apart, np.where(cutoff[..., None], u_cut, u_leg), u_col)
    direction = np.where(apart, np.where(cutoff[..., None], dir_cut, dir_leg), dir_col)
    return u, direction


def orca_velocities(
    positions: np.ndarray,
    velocities: np.ndarray,
    radii: np.ndarray,
    max_speeds: np.ndarray,
    pref_velocities: np.ndarray,
    obstacles: np.ndarray,
    dt: float,
    *,
    active: np.ndarray | None = None,
    perceivable: np.ndarray | None = None,
    time_horizon: float = 2.0,
    obstacle_time_horizon: float | None = None,
    neighbor_dist: float = 5.0,
    safety_margin: float = 0.0,
) -> np.ndarray:
    """Solve the ORCA program for the ``active`` agents.

    Every perceivable agent within ``neighbor_dist`` contributes a reciprocal
    half-plane (half the avoidance effort); circular obstacles are static and
    contribute full-responsibility half-planes that the 3-D fallback keeps hard.
    Returns one velocity per active agent, each with norm <= its max speed.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = len(positions)
    active = np.arange(n) if active is None else np.asarray(active, dtype=int)
    perceivable = np.ones(n, dtype=bool) if perceivable is None else np.asarray(perceivable, bool)
    if len(active) == 0:
        return np.zeros((0, 2))
    obst_horizon = time_horizon if obstacle_time_horizon is None else obstacle_time_horizon
    inv_dt = 1.0 / dt

    pa = positions[active]
    va = velocities[active]
    ra = radii[active] + safety_margin

    rel_pos = positions[None, :, :] - pa[:, None, :]
    rel_vel = va[:, None, :] - velocities[None, :, :]
    comb = ra[:, None] + radii[None, :] + safety_margin
    u, direction = _half_planes(rel_pos, rel_vel, comb, 1.0 / time_horizon, inv_dt)
    points = va[:, None, :] + 0.5 * u
    dist = np.linalg.norm(rel_pos, axis=-1)
    use = (dist < neighbor_dist) & perceivable[None, :]
    use[np.arange(len(active)), active] = False
    order = np.argsort(dist, axis=1, kind="stable")

    if len(obstacles):
        o_rel = obstacles[None, :, :2] - pa[:, None, :]
        o_vel = np.broadcast_to(va[:, None, :], o_rel.shape)
        o_comb = ra[:, None] + obstacles[None, :, 2]
        ou, odir = _half_planes(o_rel, o_vel, o_comb, 1.0 / obst_horizon, inv_dt)
        opoints = va[:, None, :] + ou
        o_dist = np.linalg.norm(o_rel, axis=-1) - obstacles[None, :, 2]
        o_use = o_dist < neighbor_dist
    else:
        o_use = np.zeros((len(active), 0), dtype=bool)

    out = np.empty((len(active), 2))
    for a in range(len(active)):
        lines: list[Line] = []
        for k in np.flatnonzero(o_use[a]):
            lines.append((opoints[a, k, 0], opoints[a, k, 1], odir[a, k, 0], odir[a, k, 1]))
        n_obst = len(lines)
        for k in order[a]:
            if use[a, k]:
                lines.append((points[a, k, 0], points[a, k, 1], direction[a, k, 0], direction[a, k, 1]))
        lines = [tuple(float(c) for c in line) for line in lines]
        vmax = float(max_speeds[active[a]])
        pref = (float(pref_velocities[active[a], 0]), float(pref_velocities[active[a], 1]))
        fail, result = _lp2(lines, vmax, pref, False)
        if fail < len(lines):
            result = _lp3(lines, n_obst, fail, vmax, result)
        speed = math.hypot(*result)
        if speed > vmax:
            result = (result[0] * vmax / speed, result[1] * vmax / speed)
        out[a] = result
    return out


def preferred_velocities(positions: np.ndarray, goals: np.ndarray, max_speeds: np.ndarray,
                         dt: float, stopped: np.ndarray | None = None) -> np.ndarray:
    """Unit vector to goal times max speed, shortened so agents do not overshoot."""
    delta = goals - positions
    dist = np.linalg.norm(delta, axis=1)
    speed = np.minimum(max_speeds, dist / dt)
    with np.errstate(invalid="ignore", divide="ignore"):
        pref = np.where(dist[:, None] > 1e-12, delta / dist[:, None] * speed[:, None], 0.0)
    if stopped is not None:
        pref[stopped] = 0.0
    return pref


def orca_step(world: SimWorld, dt: float) -> np.ndarray:
    """New pedestrian velocities for ``world`` (the robot, if visible, is a neighbor)."""
    cfg = world.config
    stopped = np.linalg.norm(world.goals - world.positions, axis=1) <= cfg.goal_tolerance
    pref = preferred_velocities(world.positions, world.goals, world.v_max, dt, stopped)
    pos, vel, rad, vmax = world.positions, world.velocities, world.radii, world.v_max
    perceivable = np.ones(world.n_pedestrians, dtype=bool)
    if world.robot is not None:
        r = world.robot
        pos = np.vstack([pos, r.position])
        vel = np.vstack([vel, r.velocity])
        rad = np.append(rad, r.radius)
        vmax = np.append(vmax, r.v_max)
        pref = np.vstack([pref, np.zeros(2)])
        perceivable = np.append(perceivable, cfg.robot_visible)
    return orca_velocities(
        pos, vel, rad, vmax, pref, world.obstacle_array(), dt,
        active=np.arange(world.n_pedestrians), perceivable=perceivable,
        time_horizon=cfg.time_horizon, neighbor_dist=cfg.neighbor_dist,
        safety_margin=cfg.safety_margin,
    )
