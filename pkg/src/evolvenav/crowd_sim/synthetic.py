"""Easy co-moving group scenes used for sanity checks of group inference."""
from __future__ import annotations

import numpy as np

from .episode_io import Episode


def make_group_scenes(n_scenes: int, *, n_steps: int = 12, dt: float = 0.25, group_size: int = 3,
                      separation: float = 6.0, heading_spread: float = np.pi / 6,
                      speed: float = 1.0, velocity_noise: float = 0.6,
                      cohesion: float = 1.0, noise: float = 0.04, seed: int = 0) -> list[Episode]:
    """Two groups walking past each other in opposite directions.

    Each group shares a velocity that drifts as a random walk (``velocity_noise``
    m/s per sqrt(s)); members move with it, are pulled toward their formation
    slot around the group centroid, and carry independent position jitter.
    The group-mean displacement is therefore a better predictor of a member's
    next step than its own history, which rewards correct grouping. Group
    headings lie within ``heading_spread`` of the x axis, one group each way.
    """
    rng = np.random.default_rng(seed)
    scenes = []
    for _ in range(n_scenes):
        heading = rng.uniform(-heading_spread, heading_spread)
        fwd = np.array([np.cos(heading), np.sin(heading)])
        side = np.array([-fwd[1], fwd[0]])
        n = 2 * group_size
        groups = np.repeat(np.arange(2), group_size)
        centers = [-0.5 * separation * side - 1.5 * fwd, 0.5 * separation * side + 1.5 * fwd]
        vels = np.stack([speed * fwd, -speed * fwd]) * rng.uniform(0.8, 1.2, size=(2, 1))
        offsets = np.empty((n, 2))
        pos = np.empty((n, 2))
        for g in range(2):
            ang = rng.uniform(0, 2 * np.pi) + np.arange(group_size) * 2 * np.pi / group_size
            off = 0.8 * np.stack([np.cos(ang), np.sin(ang)], -1)
            offsets[groups == g] = off
            pos[groups == g] = centers[g] + off + rng.normal(0, 0.1, size=(group_size, 2))
        track = np.empty((n, n_steps, 2))
        for t in range(n_steps):
            track[:, t] = pos
            centroid = np.stack([pos[groups == g].mean(0) for g in range(2)])
            pull = cohesion * (centroid[groups] + offsets - pos)
            pos = pos + dt * (vels[groups] + pull) + rng.normal(0, noise, size=pos.shape)
            vels = vels + rng.normal(0, velocity_noise * np.sqrt(dt), size=vels.shape)
        scenes.append(Episode(positions=track, dt=dt, group_ids=groups))
    return scenes
