"""Sliding-window extraction and padded batching of episode tracks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from ..crowd_sim.episode_io import Episode


@dataclass
class WindowSet:
    tracks: np.ndarray   # [W, N_max, T_h + T_f, 2], centred per window
    mask: np.ndarray     # [W, N_max] bool
    groups: np.ndarray   # [W, N_max] int, -1 for padding / unknown
    offsets: np.ndarray  # [W, 2] subtracted centre

    def __len__(self) -> int:
        return self.tracks.shape[0]

    def subset(self, idx) -> "WindowSet":
        return WindowSet(self.tracks[idx], self.mask[idx], self.groups[idx], self.offsets[idx])


def window_starts(n_steps: int, length: int, stride: int = 1) -> list[int]:
    return list(range(0, n_steps - length + 1, stride))


def make_windows(episodes: list[Episode], T_h: int, T_f: int, stride: int = 1,
                 center: bool = True, min_agents: int = 2) -> WindowSet:
    """Cut every episode into windows of ``T_h + T_f`` steps.

    Agents missing at any step of a window are dropped from it; windows with
    fewer than ``min_agents`` agents are skipped. Each window is translated so
    the centroid of the last observed positions sits at the origin.
    """
    length = T_h + T_f
    items = []
    for ep in episodes:
        present = ep.present if ep.present is not None else np.ones(ep.positions.shape[:2], bool)
        gids = ep.group_ids if ep.group_ids is not None else -np.ones(ep.n_agents, int)
        for s in window_starts(ep.n_steps, length, stride):
            keep = present[:, s:s + length].all(1)
            if keep.sum() < min_agents:
                continue
            items.append((ep.positions[keep, s:s + length], gids[keep]))
    if not items:
        raise ValueError(f"no windows of length {length} with >= {min_agents} agents")
    n_max = max(x.shape[0] for x, _ in items)
    w = len(items)
    tracks = np.zeros((w, n_max, length, 2))
    mask = np.zeros((w, n_max), bool)
    groups = -np.ones((w, n_max), int)
    offsets = np.zeros((w, 2))
    for k, (x, g) in enumerate(items):
        n = x.shape[0]
        off = x[:, T_h - 1].mean(0) if center else np.zeros(2)
        tracks[k, :n] = x - off
        mask[k, :n] = True
        groups[k, :n] = g
        offsets[k] = off
    return WindowSet(tracks, mask, groups, offsets)


def to_batch(ws: WindowSet, idx, T_h: int, dtype=torch.float32):
    """-> (history [B, N, T_h, 2], future [B, N, T_f, 2], mask [B, N]) trimmed to the batch's max N."""
    mask = ws.mask[idx]
    n = int(mask.sum(1).max())
    tr = torch.as_tensor(ws.tracks[idx][:, :n], dtype=dtype)
    return tr[:, :, :T_h], tr[:, :, T_h:], torch.as_tensor(mask[:, :n])


def iterate_batches(n: int, batch_size: int, rng: np.random.Generator | None = None):
    order = rng.permutation(n) if rng is not None else np.arange(n)
    for k in range(0, n, batch_size):
        yield order[k:k + batch_size]
