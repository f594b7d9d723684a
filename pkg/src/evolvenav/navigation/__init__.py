"""Social-navigation MDP: geometry, reward, predictors, environment and traces."""
from .env import MdpState, NavEnv, classify_events, run_episode, visible_humans
from .geometry import (GeometryError, GroupHull, boundary_distance, convex_hull,
                       point_segment_distance, polygon_area, quickhull, strictly_inside)
from .predictors import ConstantVelocityPredictor, RelationalPredictorAdapter, StaticPredictor
from .reward import (GOAL, HUMAN_COLLISION, OBSTACLE_COLLISION, ORDINARY, RewardConfig,
                     StepEvents, group_hulls, group_reward, total_reward)
from .trace import EpisodeTrace, TraceFormatError, format_trace, parse_trace, read_trace, write_trace

__all__ = [
    "ConstantVelocityPredictor", "EpisodeTrace", "GOAL", "GeometryError", "GroupHull",
    "HUMAN_COLLISION", "MdpState", "NavEnv", "OBSTACLE_COLLISION", "ORDINARY",
    "RelationalPredictorAdapter", "RewardConfig", "StaticPredictor", "StepEvents",
    "TraceFormatError", "boundary_distance", "classify_events", "convex_hull", "format_trace",
    "group_hulls", "group_reward", "parse_trace", "point_segment_distance", "polygon_area",
    "quickhull", "read_trace", "run_episode", "strictly_inside", "total_reward",
    "visible_humans", "write_trace",
]
