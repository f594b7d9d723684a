"""Navigation metrics over evaluated episode traces."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..navigation.reward import group_hulls
from ..navigation.trace import EpisodeTrace

METRIC_NAMES = ("SR", "CR", "TR", "NT", "PL", "ITR", "SD", "GI")
COLLISIONS = ("collision_human", "collision_obstacle")


class MetricError(ValueError):
    pass


@dataclass
class MetricsRecord:
    """Mean and standard deviation of each metric over its contributing episodes."""
    mean: dict
    std: dict
    n_episodes: int

    def row(self) -> dict:
        return {k: self.mean[k] for k in METRIC_NAMES}

    def format(self) -> str:
        cells = [f"{k} {self.mean[k]:.3f}±{self.std[k]:.3f}" for k in METRIC_NAMES]
        return f"n={self.n_episodes} " + " ".join(cells)


@dataclass
class EpisodeMetrics:
    outcome: str
    nav_time: float
    path_length: float
    itr: float
    intrusion_distances: list
    group_intrusion: bool


def intrusion_steps(tr: EpisodeTrace, lookahead: int = 5) -> tuple[np.ndarray, np.ndarray]:
    """Per step t = 1..T: whether the robot at t overlaps any human's true position at t+1..t+lookahead,
    and the robot's distance to its closest human at t."""
    robot = tr.robot_path()
    humans = tr.humans()
    t_len = tr.n_steps
    hit = np.zeros(t_len, bool)
    closest = np.full(t_len, np.inf)
    if humans.shape[1] == 0:
        return hit, closest
    thresh = tr.robot_radius + np.asarray(tr.human_radii, float)
    for t in range(1, t_len + 1):
        closest[t - 1] = np.linalg.norm(humans[t] - robot[t], axis=-1).min()
        fut = humans[t + 1:t + 1 + lookahead]
        if len(fut):
            d = np.linalg.norm(fut - robot[t], axis=-1)
            hit[t - 1] = bool((d < thresh[None]).any())
    return hit, closest


def entered_group(tr: EpisodeTrace) -> bool:
    """Robot strictly inside some group's hull (positive area) at any recorded step."""
    humans = tr.humans()
    for t, p in enumerate(tr.robot_path()):
        for hull in group_hulls(humans[t], tr.group_ids):
            if hull.area > 0 and hull.contains(p):
                return True
    return False


def episode_metrics(tr: EpisodeTrace) -> EpisodeMetrics:
    outcome = tr.outcome or "timeout"
    path = tr.robot_path()
    hit, closest = intrusion_steps(tr)
    return EpisodeMetrics(
        outcome=outcome,
        nav_time=tr.n_steps * tr.dt,
        path_length=float(np.linalg.norm(np.diff(path, axis=0), axis=1).sum()),
        itr=float(hit.mean()) if tr.n_steps else 0.0,
        intrusion_distances=[float(d) for d in closest[hit]],
        group_intrusion=entered_group(tr),
    )


def _mean_std(values) -> tuple[float, float]:
    if len(values) == 0:
        return math.nan, math.nan
    v = np.asarray(values, float)
    return float(v.mean()), float(v.std())


def aggregate(per_episode: list[EpisodeMetrics]) -> MetricsRecord:
    if not per_episode:
        raise MetricError("no episodes to evaluate")
    success = [m for m in per_episode if m.outcome == "success"]
    cols = {
        "SR": [float(m.outcome == "success") for m in per_episode],
        "CR": [float(m.outcome in COLLISIONS) for m in per_episode],
        "TR": [float(m.outcome not in COLLISIONS and m.outcome != "success") for m in per_episode],
        "NT": [m.nav_time for m in success],
        "PL": [m.path_length for m in success],
        "ITR": [m.itr for m in per_episode],
        # per-episode mean distance over its intrusion steps
        "SD": [float(np.mean(m.intrusion_distances)) for m in per_episode if m.intrusion_distances],
        "GI": [float(m.group_intrusion) for m in per_episode],
    }
    mean, std = {}, {}
    for k in METRIC_NAMES:
        mean[k], std[k] = _mean_std(cols[k])
    return MetricsRecord(mean, std, len(per_episode))


def compute_nav_metrics(traces: list[EpisodeTrace]) -> MetricsRecord:
    return aggregate([episode_metrics(tr) for tr in traces])
