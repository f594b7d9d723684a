"""Navigation episode traces and their line-oriented text export.

Layout::

    #TRACE n_humans dt robot_radius goal_x goal_y
    #OBST cx cy r                      (zero or more)
    S t robot_x robot_y reward event   (one per step, t = 0 is the start state)
    H t human_id x y radius group_id   (n_humans per step)
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

START = "start"
TERMINAL_EVENTS = ("success", "collision_human", "collision_obstacle", "timeout")


class TraceFormatError(ValueError):
    pass


@dataclass
class EpisodeTrace:
    dt: float
    robot_radius: float
    goal: np.ndarray
    robot_positions: list = field(default_factory=list)   # T + 1 entries of [2]
    human_positions: list = field(default_factory=list)   # T + 1 entries of [N, 2]
    human_radii: np.ndarray = field(default_factory=lambda: np.zeros(0))
    group_ids: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    rewards: list = field(default_factory=list)           # T entries
    events: list = field(default_factory=list)            # T entries, last one terminal
    obstacles: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))

    @property
    def n_steps(self) -> int:
        return len(self.rewards)

    @property
    def outcome(self) -> str | None:
        return self.events[-1] if self.events and self.events[-1] in TERMINAL_EVENTS else None

    def robot_path(self) -> np.ndarray:
        return np.asarray(self.robot_positions, float).reshape(-1, 2)

    def humans(self) -> np.ndarray:
        n = len(self.human_positions[0]) if self.human_positions else 0
        return np.asarray(self.human_positions, float).reshape(len(self.human_positions), n, 2)


def format_trace(tr: EpisodeTrace) -> str:
    humans = tr.humans()
    n = humans.shape[1]
    lines = [f"#TRACE {n} {tr.dt!r} {tr.robot_radius!r} {float(tr.goal[0])!r} {float(tr.goal[1])!r}"]
    for cx, cy, r in np.asarray(tr.obstacles).reshape(-1, 3):
        lines.append(f"#OBST {float(cx)!r} {float(cy)!r} {float(r)!r}")
    for t, pos in enumerate(tr.robot_path()):
        reward = 0.0 if t == 0 else float(tr.rewards[t - 1])
        event = START if t == 0 else tr.events[t - 1]
        lines.append(f"S {t} {float(pos[0])!r} {float(pos[1])!r} {reward!r} {event}")
        for i in range(n):
            x, y = humans[t, i]
            lines.append(f"H {t} {i} {float(x)!r} {float(y)!r} {float(tr.human_radii[i])!r} "
                         f"{int(tr.group_ids[i])}")
    return "\n".join(lines) + "\n"


def write_trace(path: str | Path, tr: EpisodeTrace) -> None:
    Path(path).write_text(format_trace(tr))


def parse_trace(text: str, source: str = "<string>") -> EpisodeTrace:
    rows = text.splitlines()
    if not rows or not rows[0].startswith("#TRACE"):
        raise TraceFormatError(f"{source}:1: missing #TRACE header")
    try:
        _, n_s, dt_s, rr_s, gx, gy = rows[0].split()
        n = int(n_s)
        tr = EpisodeTrace(float(dt_s), float(rr_s), np.array([float(gx), float(gy)]))
    except ValueError as exc:
        raise TraceFormatError(f"{source}:1: bad header {rows[0]!r}") from exc
    obst, radii, groups = [], np.zeros(n), np.zeros(n, int)
    step_humans = None
    for lineno, line in enumerate(rows[1:], 2):
        parts = line.split()
        if not parts:
            continue
        try:
            if parts[0] == "#OBST":
                obst.append([float(v) for v in parts[1:4]])
            elif parts[0] == "S":
                t = int(parts[1])
                if t != len(tr.robot_positions):
                    raise TraceFormatError(f"{source}:{lineno}: step {t} out of order")
                tr.robot_positions.append(np.array([float(parts[2]), float(parts[3])]))
                if t > 0:
                    tr.rewards.append(float(parts[4]))
                    tr.events.append(parts[5])
                step_humans = np.zeros((n, 2))
                tr.human_positions.append(step_humans)
            elif parts[0] == "H":
                if step_humans is None or int(parts[1]) != len(tr.robot_positions) - 1:
                    raise TraceFormatError(f"{source}:{lineno}: human row outside its step")
                i = int(parts[2])
                step_humans[i] = [float(parts[3]), float(parts[4])]
                radii[i] = float(parts[5])
                groups[i] = int(parts[6])
            else:
                raise TraceFormatError(f"{source}:{lineno}: unknown record {parts[0]!r}")
        except (ValueError, IndexError) as exc:
            if isinstance(exc, TraceFormatError):
                raise
            raise TraceFormatError(f"{source}:{lineno}: malformed line {line!r}") from exc
    tr.obstacles = np.array(obst).reshape(-1, 3)
    tr.human_radii, tr.group_ids = radii, groups
    return tr


def read_trace(path: str | Path) -> EpisodeTrace:
    path = Path(path)
    return parse_trace(path.read_text(), str(path))
