"""Line-oriented episode files.

Layout::

    N T dt
    #OBST cx cy r            (zero or more)
    t agent_id x y group_id  (N lines per time step, T steps)

Floats are written with ``repr`` so a write/read cycle is lossless.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class EpisodeFormatError(ValueError):
    pass


@dataclass
class Episode:
    positions: np.ndarray  # [N, T, 2]
    dt: float
    group_ids: np.ndarray | None = None  # [N]
    obstacles: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    agent_ids: np.ndarray | None = None
    # [N, T] bool; None means every agent is present at every step
    present: np.ndarray | None = None

    @property
    def n_agents(self) -> int:
        return self.positions.shape[0]

    @property
    def n_steps(self) -> int:
        return self.positions.shape[1]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Episode):
            return NotImplemented
        same_groups = (self.group_ids is None and other.group_ids is None) or (
            self.group_ids is not None and other.group_ids is not None
            and np.array_equal(self.group_ids, other.group_ids))
        return (self.dt == other.dt and np.array_equal(self.positions, other.positions)
                and same_groups and np.array_equal(self.obstacles, other.obstacles))


def format_episode(ep: Episode) -> str:
    n, t = ep.n_agents, ep.n_steps
    groups = ep.group_ids if ep.group_ids is not None else -np.ones(n, dtype=int)
    lines = [f"{n} {t} {ep.dt!r}"]
    for cx, cy, r in ep.obstacles:
        lines.append(f"#OBST {float(cx)!r} {float(cy)!r} {float(r)!r}")
    for step in range(t):
        for i in range(n):
            x, y = ep.positions[i, step]
            lines.append(f"{step} {i} {float(x)!r} {float(y)!r} {int(groups[i])}")
    return "\n".join(lines) + "\n"


def write_episode(path: str | Path, ep: Episode) -> None:
    path = Path(path)
    try:
        path.write_text(format_episode(ep))
    except OSError as exc:
        raise OSError(f"failed to write episode file {path}: {exc}") from exc


def parse_episode(text: str, source: str = "<string>") -> Episode:
    rows = text.splitlines()
    if not rows:
        raise EpisodeFormatError(f"{source}: empty episode file")
    try:
        n_s, t_s, dt_s = rows[0].split()
        n, t, dt = int(n_s), int(t_s), float(dt_s)
    except ValueError as exc:
        raise EpisodeFormatError(f"{source}:1: bad header {rows[0]!r}") from exc
    positions = np.full((n, t, 2), np.nan)
    groups = np.full(n, -1, dtype=int)
    obstacles = []
    for lineno, row in enumerate(rows[1:], start=2):
        row = row.strip()
        if not row:
            continue
        parts = row.split()
        try:
            if parts[0] == "#OBST":
                obstacles.append([float(parts[1]), float(parts[2]), float(parts[3])])
                continue
            if len(parts) != 5:
                raise ValueError("expected 5 fields")
            step, agent = int(parts[0]), int(parts[1])
            positions[agent, step] = (float(parts[2]), float(parts[3]))
            groups[agent] = int(parts[4])
        except (ValueError, IndexError) as exc:
            raise EpisodeFormatError(f"{source}:{lineno}: malformed line {row!r} ({exc})") from exc
    if np.isnan(positions).any():
        raise EpisodeFormatError(f"{source}: missing agent rows (header says N={n}, T={t})")
    return Episode(positions=positions, dt=dt,
                   group_ids=None if (groups < 0).all() else groups,
                   obstacles=np.array(obstacles, dtype=float).reshape(-1, 3))


def read_episode(path: str | Path) -> Episode:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"failed to read episode file {path}: {exc}") from exc
    return parse_episode(text, str(path))
