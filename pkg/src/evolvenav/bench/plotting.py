"""Static figure export (trajectories with group hulls, training curves)."""
from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ..navigation.reward import group_hulls  # noqa: E402
from ..navigation.trace import EpisodeTrace  # noqa: E402


def plot_trace(tr: EpisodeTrace, path: str | Path, title: str | None = None, hull_step: int | None = None) -> Path:
    """Robot and human paths; group hulls drawn at ``hull_step`` (default: the middle step)."""
    robot = tr.robot_path()
    humans = tr.humans()
    fig, ax = plt.subplots(figsize=(6, 6))
    for cx, cy, r in np.asarray(tr.obstacles).reshape(-1, 3):
        ax.add_patch(plt.Circle((cx, cy), r, color="0.5", alpha=0.6))
    for i in range(humans.shape[1]):
        g = int(tr.group_ids[i]) if len(tr.group_ids) else -1
        ax.plot(humans[:, i, 0], humans[:, i, 1], lw=0.8, color=f"C{(g % 9) + 1}" if g >= 0 else "0.6")
    step = len(humans) // 2 if hull_step is None else hull_step
    if len(humans):
        for hull in group_hulls(humans[step], tr.group_ids):
            v = np.vstack([hull.vertices, hull.vertices[:1]])
            ax.fill(v[:, 0], v[:, 1], alpha=0.2, color=f"C{(hull.group_id % 9) + 1}")
    ax.plot(robot[:, 0], robot[:, 1], "k-", lw=2, label="robot")
    ax.plot(*robot[0], "ko")
    ax.plot(*tr.goal, "r*", ms=12, label="goal")
    ax.set_aspect("equal")
    ax.legend(loc="upper right")
    ax.set_title(title or f"outcome: {tr.outcome}")
    path = Path(path)
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path


def plot_curves(csv_path: str | Path, path: str | Path) -> Path:
    """Loss terms and validation errors from a training-curve CSV."""
    with open(csv_path) as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{csv_path}: no curve rows")
    epoch = np.array([float(r["epoch"]) for r in rows])
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(10, 4))
    for key in ("L_Rec", "L_KL", "L_SM", "L_SH", "L_SP"):
        vals = np.array([float(r[key]) for r in rows])
        if np.any(vals > 0):
            a1.semilogy(epoch, np.maximum(vals, 1e-12), label=key)
    a1.set_xlabel("epoch")
    a1.legend()
    for key in ("val_minADE", "val_minFDE"):
        vals = np.array([float(r[key]) if r[key] not in ("", "nan") else np.nan for r in rows])
        a2.plot(epoch, vals, label=key)
    a2.set_xlabel("epoch")
    a2.legend()
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path
