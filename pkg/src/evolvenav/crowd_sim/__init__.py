"""Group-aware 2-D crowd simulation with ORCA-controlled pedestrians."""
from .dataset import DEFAULT_COUNTS, generate_dataset, simulate_episode
from .episode_io import Episode, EpisodeFormatError, parse_episode, read_episode, write_episode
from .orca import orca_step, orca_velocities, preferred_velocities
from .scenario import init_scenario
from .synthetic import make_group_scenes
from .types import (ObstacleSpec, PedestrianState, RobotState, ScenarioConfig, ScenarioError,
                    SimWorld)
from .world import clamp_speed, guard_overlaps, step_world

__all__ = [
    "DEFAULT_COUNTS", "Episode", "EpisodeFormatError", "ObstacleSpec", "PedestrianState",
    "RobotState", "ScenarioConfig", "ScenarioError", "SimWorld", "clamp_speed",
    "generate_dataset", "guard_overlaps", "init_scenario", "make_group_scenes", "orca_step",
    "orca_velocities", "parse_episode", "preferred_velocities", "read_episode",
    "simulate_episode", "step_world", "write_episode",
]
