"""Navigation reward: terminal constants, proximity shaping and the group-hull term."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import GroupHull

# reward branches, in priority order
HUMAN_COLLISION = "collision_human"
OBSTACLE_COLLISION = "collision_obstacle"
GOAL = "success"
ORDINARY = "ordinary"


@dataclass
class RewardConfig:
    r_success: float = 10.0
    r_coll_h: float = -20.0
    r_coll_o: float = -10.0
    alpha: float = 0.1
    beta1: float = 0.25
    beta2: float = 0.1
    gamma_group: float = 0.1
    area_floor: float = 0.25
    group_distance_cap: float | None = None  # optional clip on d in the group term
    discomfort: float = 1.0     # width of the proximity penalty band (m of surface clearance)
    timeout_steps: int = 100
    goal_mode: str = "potential"      # "potential": alpha * (d_prev - d); "literal": -alpha * d
    proximity_mode: str = "penalty"   # "penalty": band penalty; "literal": beta * min distance
    hull_source: str = "ground_truth"  # or "inferred"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not self.r_success > 0 > self.r_coll_o >= self.r_coll_h:
            raise ValueError("need r_success > 0 > r_coll_o >= r_coll_h")
        if self.goal_mode not in ("potential", "literal"):
            raise ValueError(f"unknown goal_mode {self.goal_mode!r}")
        if self.proximity_mode not in ("penalty", "literal"):
            raise ValueError(f"unknown proximity_mode {self.proximity_mode!r}")
        if self.hull_source not in ("ground_truth", "inferred"):
            raise ValueError(f"unknown hull_source {self.hull_source!r}")
        if self.area_floor <= 0 or self.timeout_steps < 1:
            raise ValueError("area_floor must be positive and timeout_steps >= 1")


@dataclass
class StepEvents:
    goal: bool = False
    human_collision: bool = False
    obstacle_collision: bool = False

    def branch(self) -> str:
        if self.human_collision:
            return HUMAN_COLLISION
        if self.obstacle_collision:
            return OBSTACLE_COLLISION
        if self.goal:
            return GOAL
        return ORDINARY


def group_reward(robot_pos, hulls: list[GroupHull], gamma: float, area_floor: float = 0.25,
                 distance_cap: float | None = None) -> float:
    """gamma * c * d / max(area, floor) for the hull whose boundary is nearest.

    c is +1 outside the hull and -1 strictly inside it. ``distance_cap``
    optionally clips d so that far-away groups do not pay a standing bonus.
    """
    if not hulls:
        return 0.0
    dists = [h.distance(robot_pos) for h in hulls]
    k = int(np.argmin(dists))
    sign = -1.0 if hulls[k].contains(robot_pos) else 1.0
    d = dists[k] if distance_cap is None else min(dists[k], distance_cap)
    return gamma * sign * d / max(hulls[k].area, area_floor)


def _proximity(clearance: float | None, scale: float, cfg: RewardConfig, center_dist: float | None) -> float:
    if clearance is None:
        return 0.0
    if cfg.proximity_mode == "literal":
        return scale * center_dist
    return -scale * max(0.0, cfg.discomfort - clearance)


def human_proximity(robot_pos, robot_radius, predicted, radii):
    """(min surface clearance, min centre distance) to any predicted human position, or Nones."""
    predicted = np.asarray(predicted, float).reshape(len(radii), -1, 2) if len(radii) else None
    if predicted is None or predicted.size == 0:
        return None, None
    d = np.linalg.norm(predicted - np.asarray(robot_pos)[None, None], axis=-1)
    clear = d - robot_radius - np.asarray(radii)[:, None]
    return float(clear.min()), float(d.min())


def obstacle_proximity(robot_pos, robot_radius, obstacles):
    obstacles = np.asarray(obstacles, float).reshape(-1, 3)
    if len(obstacles) == 0:
        return None, None
    d = np.linalg.norm(obstacles[:, :2] - np.asarray(robot_pos)[None], axis=-1)
    return float((d - robot_radius - obstacles[:, 2]).min()), float(d.min())


def total_reward(events: StepEvents, cfg: RewardConfig, *, robot_pos, robot_radius, goal,
                 predicted=(), human_radii=(), obstacles=(), hulls=(),
                 prev_goal_distance: float | None = None) -> tuple[float, str]:
    """Reward for one step and the branch that produced it."""
    branch = events.branch()
    if branch == HUMAN_COLLISION:
        return cfg.r_coll_h, branch
    if branch == OBSTACLE_COLLISION:
        return cfg.r_coll_o, branch
    if branch == GOAL:
        return cfg.r_success, branch
    d_goal = float(np.linalg.norm(np.asarray(robot_pos, float) - np.asarray(goal, float)))
    if cfg.goal_mode == "literal" or prev_goal_distance is None:
        r_goal = -cfg.alpha * d_goal if cfg.goal_mode == "literal" else 0.0
    else:
        r_goal = cfg.alpha * (prev_goal_distance - d_goal)
    clear_h, dist_h = human_proximity(robot_pos, robot_radius, predicted, list(human_radii))
    clear_o, dist_o = obstacle_proximity(robot_pos, robot_radius, obstacles)
    r_pred = _proximity(clear_h, cfg.beta1, cfg, dist_h)
    r_obst = _proximity(clear_o, cfg.beta2, cfg, dist_o)
    r_group = group_reward(robot_pos, list(hulls), cfg.gamma_group, cfg.area_floor,
                           cfg.group_distance_cap)
    return r_group + r_pred + r_obst + r_goal, branch


def group_hulls(positions, group_ids, min_members: int = 2) -> list[GroupHull]:
    """One hull per group id (>= 0) with at least ``min_members`` members."""
    positions = np.asarray(positions, float).reshape(-1, 2)
    group_ids = np.asarray(group_ids)
    hulls = []
    for g in np.unique(group_ids):
        if g < 0:
            continue
        members = positions[group_ids == g]
        if len(members) >= min_members:
            hulls.append(GroupHull.from_points(members, int(g)))
    return hulls
