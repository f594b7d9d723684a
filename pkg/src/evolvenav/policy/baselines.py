"""Non-learned and policy-network robot controllers usable as ``policy_fn(state)``."""
from __future__ import annotations

import numpy as np
import torch

from ..crowd_sim.orca import orca_velocities, preferred_velocities
from .network import NavPolicy, batch_observations


class OrcaRobotPolicy:
    """Drives the robot with ORCA toward its goal.

    With ``perceive_humans=False`` the robot only avoids static obstacles,
    which is the blind reference for the reciprocal-avoidance check.
    """

    def __init__(self, env, perceive_humans: bool = True):
        self.env = env
        self.perceive_humans = perceive_humans

    def __call__(self, state) -> np.ndarray:
        w = self.env.world
        r = w.robot
        cfg = w.config
        pos = np.vstack([w.positions, r.position])
        vel = np.vstack([w.velocities, r.velocity])
        rad = np.append(w.radii, r.radius)
        vmax = np.append(w.v_max, r.v_max)
        pref = np.zeros_like(pos)
        pref[-1] = preferred_velocities(r.position[None], r.goal[None], np.array([r.v_max]), cfg.dt)[0]
        perceivable = np.zeros(len(pos), bool)
        if self.perceive_humans:
            d = np.linalg.norm(w.positions - r.position[None], axis=1)
            perceivable[:-1] = d <= r.sensor_range
        out = orca_velocities(pos, vel, rad, vmax, pref, w.obstacle_array(), cfg.dt,
                              active=np.array([len(pos) - 1]), perceivable=perceivable,
                              time_horizon=cfg.time_horizon, neighbor_dist=cfg.neighbor_dist,
                              safety_margin=cfg.safety_margin)
        return out[0]


class GreedyGoalPolicy:
    """Heads straight to the goal at full speed."""

    def __call__(self, state) -> np.ndarray:
        r = state.robot
        return preferred_velocities(r.position[None], r.goal[None], np.array([r.v_max]), 0.25)[0]


class NetworkPolicy:
    """Wraps a trained NavPolicy; deterministic (mean action) unless ``sample`` is set."""

    def __init__(self, policy: NavPolicy, sample: bool = False, seed: int = 0):
        self.policy = policy.eval()
        self.sample = sample
        self.gen = torch.Generator().manual_seed(seed)
        self.reset()

    def reset(self) -> None:
        self.hidden = self.policy.initial_hidden(1)
        self._last_t = None

    @torch.no_grad()
    def __call__(self, state) -> np.ndarray:
        if self._last_t is not None and state.time_step <= self._last_t:
            self.reset()  # a new episode started
        self._last_t = state.time_step
        obs = batch_observations([state], self.policy.cfg.horizon)
        mean, std, _, self.hidden = self.policy.step(obs, self.hidden)
        a = mean[0]
        if self.sample:
            a = a + std * torch.randn(2, generator=self.gen)
        return a.numpy().astype(float)
