"""Trajectory predictors consumed by the navigation environment.

All predictors map visible humans' histories ``[N, T_h, 2]`` (oldest first)
to future positions ``[N, T_f, 2]``.
"""
from __future__ import annotations

import numpy as np
import torch

from ..prediction.metrics import hyperedge_labels
from ..relational.gumbel import EXPECTED


class ConstantVelocityPredictor:
    name = "cv"

    def __init__(self, dt: float, horizon: int = 5):
        self.dt = dt
        self.horizon = horizon

    def predict(self, histories: np.ndarray) -> np.ndarray:
        h = np.asarray(histories, float)
        vel = (h[:, -1] - h[:, -2]) / self.dt if h.shape[1] >= 2 else np.zeros_like(h[:, -1])
        k = np.arange(1, self.horizon + 1)[None, :, None]
        return h[:, -1:, :] + vel[:, None, :] * k * self.dt


class StaticPredictor:
    """Provides no future information: every 'prediction' is the current position."""
    name = "none"

    def __init__(self, horizon: int = 5):
        self.horizon = horizon

    def predict(self, histories: np.ndarray) -> np.ndarray:
        h = np.asarray(histories, float)
        return np.repeat(h[:, -1:, :], self.horizon, axis=1)


class RelationalPredictorAdapter:
    """Frozen relational predictor in expected (deterministic) relation mode.

    Histories are centred on the current centroid before inference. Scenes
    with a single visible human fall back to constant velocity since
    relational inference needs two agents.
    """
    name = "relational"

    def __init__(self, model, dt: float, horizon: int | None = None):
        self.model = model.eval()
        for p in self.model.parameters():
            p.requires_grad_(False)
        self.horizon = model.cfg.T_f if horizon is None else horizon
        self.cv = ConstantVelocityPredictor(dt, self.horizon)
        self.last_groups: np.ndarray | None = None

    @property
    def history_length(self) -> int:
        return self.model.cfg.T_h

    def predict(self, histories: np.ndarray) -> np.ndarray:
        h = np.asarray(histories, float)
        if len(h) < 2:
            self.last_groups = -np.ones(len(h), int)
            return self.cv.predict(h)
        center = h[:, -1].mean(0)
        x = torch.as_tensor(h - center, dtype=next(self.model.parameters()).dtype)[None]
        with torch.no_grad():
            out = self.model.rollout(x, relation_mode=EXPECTED, incidence_mode=EXPECTED,
                                     horizon=self.horizon)
        self.last_groups = inferred_groups(out.relations[0]) if out.relations else None
        return out.means[0].double().numpy() + center


def inferred_groups(step) -> np.ndarray | None:
    if step.pim is None:
        return None
    return hyperedge_labels(step.state.incidence[0].numpy(), step.pim[0].numpy())
