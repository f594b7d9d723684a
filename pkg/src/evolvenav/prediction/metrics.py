from __future__ import annotations

import numpy as np


class MetricError(ValueError):
    pass


def minade_minfde(samples, ground_truth, mask=None) -> tuple[float, float]:
    """Best-of-K displacement errors for one scene or a batch of scenes.

    samples: [K, N, T, 2] or [K, B, N, T, 2]; ground_truth: [N, T, 2] or
    [B, N, T, 2]; mask: optional [N] / [B, N] marking real agents. For a
    batch the per-scene minima are averaged.
    """
    s = np.asarray(samples, dtype=np.float64)
    gt = np.asarray(ground_truth, dtype=np.float64)
    if s.ndim == gt.ndim + 1 and s.shape[0] == 0:
        raise MetricError("need at least one sample")
    if s.ndim != gt.ndim + 1 or s.shape[1:] != gt.shape:
        raise MetricError(f"shape mismatch: samples {s.shape}, ground truth {gt.shape}")
    if gt.ndim == 3:
        s, gt = s[:, None], gt[None]
        mask = None if mask is None else np.asarray(mask)[None]
    m = np.ones(gt.shape[:2], dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    w = m.astype(np.float64)
    n_agents = w.sum(-1)
    if np.any(n_agents == 0):
        raise MetricError("scene without agents")
    err = np.linalg.norm(s - gt[None], axis=-1)           # [K, B, N, T]
    ade = (err.mean(-1) * w).sum(-1) / n_agents            # [K, B]
    fde = (err[..., -1] * w).sum(-1) / n_agents
    return float(ade.min(0).mean()), float(fde.min(0).mean())


def hyperedge_labels(incidence, pim) -> np.ndarray:
    """Cluster label per agent: the hyperedge (with >= 2 members) of highest
    membership probability among those containing it; -1 when there is none.

    incidence, pim: [N, M].
    """
    inc = np.asarray(incidence) > 0
    pim = np.asarray(pim, dtype=np.float64)
    valid = inc.sum(0) >= 2
    labels = -np.ones(inc.shape[0], dtype=int)
    for i in range(inc.shape[0]):
        cand = np.flatnonzero(valid & inc[i])
        if len(cand):
            labels[i] = cand[np.argmax(pim[i, cand])]
    return labels


def majority_cluster_accuracy(labels, true_groups) -> float:
    """Fraction of agents whose cluster's majority true group is their own group.

    Unassigned agents (label -1) count as errors.
    """
    labels = np.asarray(labels)
    true_groups = np.asarray(true_groups)
    if len(labels) == 0:
        raise MetricError("no agents")
    correct = 0
    for c in np.unique(labels[labels >= 0]):
        members = true_groups[labels == c]
        _, counts = np.unique(members, return_counts=True)
        correct += counts.max()
    return correct / len(labels)
