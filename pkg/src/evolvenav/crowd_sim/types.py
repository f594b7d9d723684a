from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


class ScenarioError(RuntimeError):
    """Raised when rejection sampling cannot place the scenario entities."""


@dataclass
class PedestrianState:
    position: np.ndarray
    velocity: np.ndarray
    goal: np.ndarray
    radius: float
    v_max: float
    group_id: int


@dataclass(frozen=True)
class ObstacleSpec:
    center: tuple[float, float]
    radius: float


@dataclass
class RobotState:
    position: np.ndarray
    velocity: np.ndarray
    goal: np.ndarray
    v_max: float = 1.0
    radius: float = 0.3
    sensor_range: float = 5.0

    def copy(self) -> "RobotState":
        return replace(self, position=self.position.copy(), velocity=self.velocity.copy(),
                       goal=self.goal.copy())


@dataclass
class ScenarioConfig:
    arena_side: float = 12.0
    n_groups: int = 5
    group_size_range: tuple[int, int] = (2, 5)
    dt: float = 0.25
    max_episode_steps: int = 100
    rng_seed: int = 0
    radius_range: tuple[float, float] = (0.3, 0.5)
    v_max_range: tuple[float, float] = (0.5, 1.5)
    obstacle_radius_range: tuple[float, float] = (0.6, 1.0)
    # None means "up to n_groups"
    obstacle_count_range: tuple[int, int | None] = (1, None)
    obstacle_disk_radius: float = 6.0
    time_horizon: float = 2.0
    neighbor_dist: float = 5.0
    safety_margin: float = 0.05
    with_robot: bool = True
    robot_radius: float = 0.3
    robot_v_max: float = 1.0
    robot_sensor_range: float = 5.0
    robot_min_separation: float = 10.0
    robot_visible: bool = True
    on_goal: str = "stop"
    goal_tolerance: float = 0.05
    max_placement_attempts: int = 10_000

    def obstacle_counts(self) -> tuple[int, int]:
        lo, hi = self.obstacle_count_range
        return lo, self.n_groups if hi is None else hi

    def validate(self) -> None:
        lo, hi = self.group_size_range
        if not 1 <= lo <= hi:
            raise ValueError(f"bad group_size_range {self.group_size_range}")
        if self.n_groups < 0:
            raise ValueError("n_groups must be non-negative")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.radius_range[0] > self.radius_range[1] or self.radius_range[0] <= 0:
            raise ValueError(f"bad radius_range {self.radius_range}")
        if self.v_max_range[0] > self.v_max_range[1] or self.v_max_range[0] <= 0:
            raise ValueError(f"bad v_max_range {self.v_max_range}")
        olo, ohi = self.obstacle_counts()
        if not 0 <= olo <= ohi:
            raise ValueError(f"bad obstacle_count_range {self.obstacle_count_range}")
        if self.on_goal not in ("stop", "respawn"):
            raise ValueError(f"on_goal must be 'stop' or 'respawn', got {self.on_goal!r}")
        if self.robot_min_separation > self.arena_side * np.sqrt(2):
            raise ValueError("robot_min_separation exceeds the arena diagonal")


@dataclass
class SimWorld:
    """Crowd state stored as parallel arrays (one row per pedestrian)."""

    positions: np.ndarray
    velocities: np.ndarray
    goals: np.ndarray
    radii: np.ndarray
    v_max: np.ndarray
    group_ids: np.ndarray
    obstacles: list[ObstacleSpec]
    robot: RobotState | None
    config: ScenarioConfig
    time_step: int = 0
    group_goals: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    # formation offset of each member relative to its group destination
    goal_offsets: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    rng_state: dict | None = None

    @property
    def n_pedestrians(self) -> int:
        return len(self.positions)

    @property
    def pedestrians(self) -> list[PedestrianState]:
        return [
            PedestrianState(self.positions[i].copy(), self.velocities[i].copy(), self.goals[i].copy(),
                            float(self.radii[i]), float(self.v_max[i]), int(self.group_ids[i]))
            for i in range(self.n_pedestrians)
        ]

    def obstacle_array(self) -> np.ndarray:
        if not self.obstacles:
            return np.zeros((0, 3))
        return np.array([[o.center[0], o.center[1], o.radius] for o in self.obstacles], dtype=float)

    def copy(self) -> "SimWorld":
        return replace(
            self,
            positions=self.positions.copy(),
            velocities=self.velocities.copy(),
            goals=self.goals.copy(),
            radii=self.radii.copy(),
            v_max=self.v_max.copy(),
            group_ids=self.group_ids.copy(),
            obstacles=list(self.obstacles),
            robot=None if self.robot is None else self.robot.copy(),
            group_goals=self.group_goals.copy(),
            goal_offsets=self.goal_offsets.copy(),
            rng_state=None if self.rng_state is None else dict(self.rng_state),
        )
