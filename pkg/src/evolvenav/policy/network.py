"""Attention-based recurrent actor-critic over humans, obstacles and the robot."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn


@dataclass
class PolicyConfig:
    embed: int = 128
    heads: int = 8
    gru_hidden: int = 128
    horizon: int = 5          # predicted steps per human in the entity features
    init_log_std: float = -0.5
    v_max: float = 1.0
    robot_dim: int = 7

    def __post_init__(self):
        if self.embed % self.heads:
            raise ValueError("embedding width must be divisible by the number of heads")

    @property
    def entity_dim(self) -> int:
        # relative current position, relative predicted positions, velocity, radius, obstacle flag
        return 2 + 2 * self.horizon + 2 + 2


@dataclass
class Observation:
    """Batched, padded policy inputs."""
    entities: torch.Tensor   # [B, E, F]
    mask: torch.Tensor       # [B, E] bool, real entities
    obstacle: torch.Tensor   # [B, E] bool
    robot: torch.Tensor      # [B, 7]


def entity_features(state, horizon: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-entity rows relative to the robot; humans first, then obstacles."""
    p = state.robot.position
    rows, is_obst = [], []
    for k in range(state.n_visible):
        pred = state.predictions[k, :horizon] - p
        rows.append(np.concatenate([state.human_positions[k] - p, pred.ravel(),
                                    state.human_velocities[k], [state.human_radii[k], 0.0]]))
        is_obst.append(False)
    for cx, cy, r in state.obstacles:
        rel = np.array([cx, cy]) - p
        rows.append(np.concatenate([rel, np.tile(rel, horizon), [0.0, 0.0, r, 1.0]]))
        is_obst.append(True)
    dim = 2 + 2 * horizon + 4
    return np.asarray(rows, float).reshape(-1, dim), np.asarray(is_obst, bool)


def robot_features(state) -> np.ndarray:
    r = state.robot
    to_goal = r.goal - r.position
    return np.concatenate([to_goal, r.velocity, [np.linalg.norm(to_goal), r.radius, r.v_max]])


def batch_observations(states, horizon: int, dtype=torch.float32) -> Observation:
    feats = [entity_features(s, horizon) for s in states]
    e_max = max(1, max(len(f) for f, _ in feats))
    dim = 2 + 2 * horizon + 4
    ent = np.zeros((len(states), e_max, dim))
    mask = np.zeros((len(states), e_max), bool)
    obst = np.zeros((len(states), e_max), bool)
    for b, (f, o) in enumerate(feats):
        ent[b, :len(f)] = f
        mask[b, :len(f)] = True
        obst[b, :len(f)] = o
    robot = np.stack([robot_features(s) for s in states])
    return Observation(torch.as_tensor(ent, dtype=dtype), torch.as_tensor(mask),
                       torch.as_tensor(obst), torch.as_tensor(robot, dtype=dtype))


def index_observation(obs: Observation, idx) -> Observation:
    return Observation(obs.entities[idx], obs.mask[idx], obs.obstacle[idx], obs.robot[idx])


def cat_observations(obs: list[Observation]) -> Observation:
    """Stack observations along the batch axis, padding entities to a common size."""
    e_max = max(o.entities.shape[1] for o in obs)

    def pad(t, value=0):
        extra = e_max - t.shape[1]
        if extra == 0:
            return t
        shape = (t.shape[0], extra) + tuple(t.shape[2:])
        return torch.cat([t, torch.full(shape, value, dtype=t.dtype)], 1)

    return Observation(torch.cat([pad(o.entities) for o in obs]),
                       torch.cat([pad(o.mask, False) for o in obs]),
                       torch.cat([pad(o.obstacle, False) for o in obs]),
                       torch.cat([o.robot for o in obs]))


def hho_mask(mask: torch.Tensor, obstacle: torch.Tensor) -> torch.Tensor:
    """[B, E, E] allowed (query, key) pairs: real keys, no obstacle-obstacle pairs except self."""
    b, e = mask.shape
    eye = torch.eye(e, dtype=torch.bool, device=mask.device)
    oo = obstacle.unsqueeze(-1) & obstacle.unsqueeze(-2) & ~eye
    return mask.unsqueeze(-2).expand(b, e, e) & ~oo


class NavPolicy(nn.Module):
    def __init__(self, cfg: PolicyConfig | None = None):
        super().__init__()
        self.cfg = cfg = cfg or PolicyConfig()
        d = cfg.embed
        self.hho_q = nn.Linear(cfg.entity_dim, d)
        self.hho_k = nn.Linear(cfg.entity_dim, d)
        self.hho_v = nn.Linear(cfg.entity_dim, d)
        self.robot_embed = nn.Linear(cfg.robot_dim, d)
        self.rho_q = nn.Linear(d, d)
        self.rho_k = nn.Linear(d, d)
        self.rho_v = nn.Linear(d, d)
        self.gru = nn.GRU(2 * d, cfg.gru_hidden, num_layers=1)
        self.value_head = nn.Linear(cfg.gru_hidden, 1)
        self.mean_head = nn.Linear(cfg.gru_hidden, 2)
        self.log_std = nn.Parameter(torch.full((2,), cfg.init_log_std))

    # -- attention layers ----------------------------------------------------
    def hho_attention(self, x: torch.Tensor, mask: torch.Tensor, obstacle: torch.Tensor,
                      return_weights: bool = False):
        """Multi-head self-attention over entities; [B, E, F] -> [B, E, d]."""
        b, e, _ = x.shape
        h = self.cfg.heads
        dh = self.cfg.embed // h
        q = self.hho_q(x).view(b, e, h, dh).transpose(1, 2)
        k = self.hho_k(x).view(b, e, h, dh).transpose(1, 2)
        v = self.hho_v(x).view(b, e, h, dh).transpose(1, 2)
        logits = q @ k.transpose(-1, -2) / math.sqrt(dh)          # [B, H, E, E]
        allowed = hho_mask(mask, obstacle).unsqueeze(1)
        logits = logits.masked_fill(~allowed, float("-inf"))
        # rows of padded queries have no allowed key only if the scene is empty
        w = torch.softmax(logits, -1).nan_to_num(0.0)
        out = (w @ v).transpose(1, 2).reshape(b, e, self.cfg.embed)
        return (out, w) if return_weights else out

    def rho_attention(self, v_hho: torch.Tensor, robot_embed: torch.Tensor, mask: torch.Tensor,
                      return_weights: bool = False):
        """Single-head attention with the robot as key; -> [B, d]."""
        q = self.rho_q(v_hho)                                     # [B, E, d]
        k = self.rho_k(robot_embed).unsqueeze(-1)                 # [B, d, 1]
        v = self.rho_v(v_hho)
        logits = (q @ k).squeeze(-1) / math.sqrt(self.cfg.embed)  # [B, E]
        logits = logits.masked_fill(~mask, float("-inf"))
        w = torch.softmax(logits, -1).nan_to_num(0.0)
        out = (w.unsqueeze(-1) * v).sum(-2)
        return (out, w) if return_weights else out

    def encode(self, obs: Observation) -> torch.Tensor:
        """Per-step GRU input [B, 2d]."""
        h_r = self.robot_embed(obs.robot)
        if obs.mask.any():
            v_rho = self.rho_attention(self.hho_attention(obs.entities, obs.mask, obs.obstacle),
                                       h_r, obs.mask)
        else:
            v_rho = torch.zeros_like(h_r)
        return torch.cat([v_rho, h_r], -1)

    def initial_hidden(self, batch: int) -> torch.Tensor:
        return torch.zeros(1, batch, self.cfg.gru_hidden)

    def policy_value_forward(self, x: torch.Tensor, hidden: torch.Tensor, resets: torch.Tensor | None = None):
        """x: [T, B, 2d] encoded inputs; resets: [T, B] zero the hidden state before step t.

        Returns (mean [T, B, 2], std [2], value [T, B], new hidden [1, B, H]).
        """
        if resets is None:
            out, hidden = self.gru(x, hidden)
        else:
            outs = []
            for t in range(x.shape[0]):
                hidden = hidden * (1.0 - resets[t].to(x.dtype)).view(1, -1, 1)
                o, hidden = self.gru(x[t:t + 1], hidden)
                outs.append(o)
            out = torch.cat(outs)
        return self.mean_head(out), self.log_std.exp(), self.value_head(out).squeeze(-1), hidden

    def step(self, obs: Observation, hidden: torch.Tensor):
        mean, std, value, hidden = self.policy_value_forward(self.encode(obs).unsqueeze(0), hidden)
        return mean[0], std, value[0], hidden


def gaussian_log_prob(action: torch.Tensor, mean: torch.Tensor, std: torch.Tensor) -> torch.Tensor:
    return torch.distributions.Normal(mean, std).log_prob(action).sum(-1)
