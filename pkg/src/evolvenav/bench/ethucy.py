"""Reader for whitespace ``frame ped_id x y`` pedestrian trajectory text."""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..crowd_sim.episode_io import Episode

DATA_ENV = "EVOLVENAV_DATA"


class DatasetFormatError(ValueError):
    pass


@dataclass
class DatasetBundle:
    episodes: list            # one Episode per scene file
    dt: float
    tracks: list = field(default_factory=list)  # per scene: {ped_id: [L, 2] resampled track}
    sources: list = field(default_factory=list)


def parse_ethucy_text(text: str, source: str = "<string>") -> dict:
    """-> {ped_id: (frames [K], xy [K, 2])} sorted by frame."""
    rows: dict = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 4:
            raise DatasetFormatError(f"{source}:{lineno}: expected 'frame ped_id x y', got {line!r}")
        try:
            frame, pid = float(parts[0]), int(float(parts[1]))
            x, y = float(parts[2]), float(parts[3])
        except ValueError as exc:
            raise DatasetFormatError(f"{source}:{lineno}: {exc}") from None
        if not all(np.isfinite([frame, x, y])):
            raise DatasetFormatError(f"{source}:{lineno}: non-finite value")
        rows.setdefault(pid, []).append((frame, x, y, lineno))
    out = {}
    for pid, items in rows.items():
        items.sort()
        frames = np.array([r[0] for r in items])
        dup = np.flatnonzero(np.diff(frames) == 0)
        if len(dup):
            raise DatasetFormatError(f"{source}:{items[dup[0] + 1][3]}: repeated frame for pedestrian {pid}")
        out[pid] = (frames, np.array([[r[1], r[2]] for r in items]))
    return out


def frame_step(raw: dict) -> float:
    """Smallest positive frame increment within any pedestrian's track (1 if undeterminable)."""
    gaps = [np.diff(f).min() for f, _ in raw.values() if len(f) > 1]
    return float(min(gaps)) if gaps else 1.0


def resample(times: np.ndarray, xy: np.ndarray, t0: float, dt: float) -> tuple[int, np.ndarray]:
    """Linear interpolation at t0 + k*dt covering [times[0], times[-1]]; -> (first k, [L, 2])."""
    k0 = int(np.ceil((times[0] - t0) / dt - 1e-9))
    k1 = int(np.floor((times[-1] - t0) / dt + 1e-9))
    grid = t0 + dt * np.arange(k0, k1 + 1)
    return k0, np.stack([np.interp(grid, times, xy[:, 0]), np.interp(grid, times, xy[:, 1])], 1)


def load_ethucy_text(path: str | Path, dt: float = 0.4, frame_dt: float | None = None) -> DatasetBundle:
    """Load one scene file into a single episode sampled every ``dt`` seconds.

    ``frame_dt`` is the time between consecutive frame numbers; when omitted,
    the smallest frame increment is taken to be one ``dt``.
    """
    path = Path(path)
    raw = parse_ethucy_text(path.read_text(), str(path))
    if not raw:
        raise DatasetFormatError(f"{path}: no trajectory rows")
    scale = frame_dt if frame_dt is not None else dt / frame_step(raw)
    t0 = min(f[0] for f, _ in raw.values()) * scale
    pieces = {pid: resample(f * scale, xy, t0, dt) for pid, (f, xy) in raw.items()}
    pids = sorted(pieces)
    n_steps = max(k + len(tr) for k, tr in pieces.values())
    pos = np.zeros((len(pids), n_steps, 2))
    present = np.zeros((len(pids), n_steps), bool)
    for i, pid in enumerate(pids):
        k, tr = pieces[pid]
        pos[i, k:k + len(tr)] = tr
        present[i, k:k + len(tr)] = True
    ep = Episode(pos, dt, None, agent_ids=np.array(pids), present=present)
    return DatasetBundle([ep], dt, [{pid: pieces[pid][1] for pid in pids}], [str(path)])


def load_ethucy_dir(root: str | Path | None = None, dt: float = 0.4,
                    frame_dt: float | None = None, pattern: str = "*.txt") -> DatasetBundle:
    root = Path(root if root is not None else os.environ.get(DATA_ENV, "."))
    files = sorted(root.rglob(pattern))
    if not files:
        raise FileNotFoundError(f"no {pattern} files under {root}")
    bundles = [load_ethucy_text(f, dt, frame_dt) for f in files]
    return DatasetBundle([b.episodes[0] for b in bundles], dt, [b.tracks[0] for b in bundles],
                         [b.sources[0] for b in bundles])


def track_windows(track: np.ndarray, T_h: int, T_f: int, stride: int = 1) -> np.ndarray:
    """[W, T_h + T_f, 2] sliding windows over one track."""
    length = T_h + T_f
    starts = range(0, len(track) - length + 1, stride)
    return np.stack([track[s:s + length] for s in starts]) if len(track) >= length \
        else np.zeros((0, length, 2))
