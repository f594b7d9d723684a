from __future__ import annotations

import math
from dataclasses import dataclass

import torch

from ..relational.encoder import pair_mask
from .model import PredictionRollout, PredictorConfig

EPS = 1e-12


def _log(p: torch.Tensor) -> torch.Tensor:
    return torch.log(p.clamp_min(EPS))


def kl_categorical(q: torch.Tensor, p: torch.Tensor) -> torch.Tensor:
    """KL(q || p) over the last axis with an epsilon floor inside the logs."""
    return (q * (_log(q) - _log(p))).sum(-1)


def entropy(q: torch.Tensor) -> torch.Tensor:
    return -(q * _log(q)).sum(-1)


def kl_to_uniform(q: torch.Tensor) -> torch.Tensor:
    return (q * _log(q)).sum(-1) + math.log(q.shape[-1])


def kl_to_no_relation(q: torch.Tensor) -> torch.Tensor:
    delta = torch.zeros_like(q)
    delta[..., 0] = 1.0
    return kl_categorical(q, delta)


@dataclass
class LossBreakdown:
    L_Rec: torch.Tensor
    L_KL: torch.Tensor
    L_SM: torch.Tensor
    L_SH: torch.Tensor
    L_SP: torch.Tensor

    @property
    def L_total(self) -> torch.Tensor:
        return self.L_Rec + self.L_KL + self.L_SM + self.L_SH + self.L_SP

    def as_floats(self) -> dict:
        names = ("L_Rec", "L_KL", "L_SM", "L_SH", "L_SP", "L_total")
        return {k: float(getattr(self, k).detach()) for k in names}


def reconstruction_loss(means: torch.Tensor, target: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """Squared error summed over agents and steps, averaged over scenes."""
    err = ((means - target) ** 2).sum((-1, -2)) * mask.to(means.dtype)
    return err.sum() / means.shape[0]


def compute_losses(rollout: PredictionRollout, target: torch.Tensor, cfg: PredictorConfig) -> LossBreakdown:
    """Five-term training loss.

    L_Rec sums over agents and steps and averages over scenes. The
    distribution terms average over the distributions of one relation set
    (valid ordered pairs of real agents; all M hyperedge slots) and over
    scenes, so a graph's regularizer does not scale with its edge count.
    KL, SH and SP average over the relation history; SM sums over
    consecutive relation sets.
    """
    mask = rollout.mask
    rec = reconstruction_loss(rollout.means, target, mask)
    zero = rec.new_zeros(())
    kl = sm = sh = sp = zero
    if not rollout.relations:
        return LossBreakdown(rec, kl, sm, sh, sp)
    pm = pair_mask(mask).to(rec.dtype)
    n_pairs = pm.sum((-1, -2)).clamp_min(1.0)

    def cg_mean(v):
        return ((v * pm).sum((-1, -2)) / n_pairs).mean()

    def hg_mean(v):
        return v.mean(-1).mean()

    branches = []
    if rollout.relations[0].q_cg is not None:
        branches.append(("q_cg", cg_mean, cfg.alpha_kl_cg, cfg.alpha_sm_cg, cfg.alpha_sh_cg, cfg.alpha_sp_cg))
    if rollout.relations[0].q_hg is not None:
        branches.append(("q_hg", hg_mean, cfg.alpha_kl_hg, cfg.alpha_sm_hg, cfg.alpha_sh_hg, cfg.alpha_sp_hg))
    # static variants reuse one relation set for every period
    history = rollout.relations if cfg.dynamic else rollout.relations[:1]
    n = len(history)
    for attr, red, a_kl, a_sm, a_sh, a_sp in branches:
        qs = [getattr(step, attr) for step in history]
        for beta, q in enumerate(qs):
            kl = kl + a_kl * red(kl_to_uniform(q)) / n
            sh = sh + a_sh * red(entropy(q)) / n
            sp = sp + a_sp * red(kl_to_no_relation(q)) / n
            if beta + 1 < n:
                sm = sm + a_sm * red(kl_categorical(q, qs[beta + 1]))
    return LossBreakdown(rec, kl, sm, sh, sp)
