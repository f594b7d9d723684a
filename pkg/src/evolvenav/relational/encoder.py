"""Pairwise and group-wise relational encoder.

All tensors carry a leading scene-batch axis ``B`` and an agent mask
``[B, N]`` so scenes with different agent counts can be padded together.
"""
from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

from .gumbel import STOCHASTIC, binary_gumbel, gumbel_softmax
from .layers import MLP, PairMLP, masked_softmax, weighted_softmax


class StructuralError(ValueError):
    """Relational inference needs at least two agents."""


@dataclass
class EncoderConfig:
    history: int = 4
    hidden: int = 128
    embed: int = 128
    attn_dim: int = 64
    edge_types: int = 3
    hyperedge_types: int = 3
    max_hyperedges: int = 5
    tau: float = 0.5
    equal_attention: bool = False
    leaky_slope: float = 0.2
    # displacements are a few cm to tens of cm per step; scale them to O(1)
    disp_scale: float = 4.0


@dataclass
class NodeAttributes:
    v_self: torch.Tensor    # [B, N, d]
    v_social: torch.Tensor  # [B, N, d]
    v1: torch.Tensor        # [B, N, 2d]
    alpha: torch.Tensor     # [B, N, N], rows over j != i sum to 1
    mask: torch.Tensor      # [B, N] bool


@dataclass
class IncidenceState:
    logits: torch.Tensor    # [B, N, M]
    pim: torch.Tensor       # [B, N, M] membership probabilities
    incidence: torch.Tensor  # [B, N, M] sampled / thresholded memberships


@dataclass
class RelationState:
    z_cg: torch.Tensor       # [B, N, N, L_CG]
    z_hg: torch.Tensor       # [B, M, L_HG]
    incidence: torch.Tensor  # [B, N, M]
    logits_cg: torch.Tensor | None = None
    logits_hg: torch.Tensor | None = None


def pair_mask(mask: torch.Tensor) -> torch.Tensor:
    """[B, N] -> [B, N, N] valid ordered pairs with i != j."""
    n = mask.shape[-1]
    eye = torch.eye(n, dtype=torch.bool, device=mask.device)
    return mask.unsqueeze(-1) & mask.unsqueeze(-2) & ~eye


def history_features(window: torch.Tensor, disp_scale: float = 1.0) -> torch.Tensor:
    """Absolute positions concatenated with scaled per-step displacements, flattened."""
    disp = torch.diff(window, dim=-2, prepend=window[..., :1, :]) * disp_scale
    return torch.cat([window, disp], dim=-1).flatten(-2)


class RelationalEncoder(nn.Module):
    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        self.cfg = cfg
        d, h = cfg.embed, cfg.hidden
        self.f_h = MLP(4 * cfg.history, h, d)
        self.attn_w = nn.Linear(d, cfg.attn_dim, bias=False)
        self.attn_a = nn.Parameter(torch.randn(2 * cfg.attn_dim) / cfg.attn_dim ** 0.5)
        self.f1_cg_e = PairMLP(d, d, h, d)
        self.f1_cg_v = MLP(d, h, d)
        self.f2_cg_e = PairMLP(2 * d, 2 * d, h, cfg.edge_types)
        self.f_pim = MLP(2 * d, h, cfg.max_hyperedges)
        self.f1_hg_e = MLP(2 * d, h, d)
        self.hg_w1 = nn.Linear(d, cfg.attn_dim, bias=False)
        self.hg_w2 = nn.Linear(2 * d, cfg.attn_dim, bias=False)
        self.hg_a = nn.Parameter(torch.randn(2 * cfg.attn_dim) / cfg.attn_dim ** 0.5)
        self.f1_hg_v = MLP(d, h, d)
        self.f2_hg_e = MLP(d, h, cfg.hyperedge_types)

    # parameter groups; the warm-up stage trains only the pairwise ones
    HYPERGRAPH_MODULES = ("f_pim", "f1_hg_e", "hg_w1", "hg_w2", "hg_a", "f1_hg_v", "f2_hg_e")

    def hypergraph_parameters(self):
        for name, p in self.named_parameters():
            if name.split(".")[0] in self.HYPERGRAPH_MODULES:
                yield p

    def pairwise_parameters(self):
        for name, p in self.named_parameters():
            if name.split(".")[0] not in self.HYPERGRAPH_MODULES:
                yield p

    # -- observation graph -------------------------------------------------
    def encode_observation_graph(self, window: torch.Tensor,
                                 mask: torch.Tensor | None = None) -> NodeAttributes:
        """window: [B, N, T_h, 2]."""
        if window.shape[1] < 2:
            raise StructuralError("relational inference needs N >= 2 agents")
        b, n = window.shape[:2]
        if mask is None:
            mask = torch.ones(b, n, dtype=torch.bool, device=window.device)
        v_self = self.f_h(history_features(window, self.cfg.disp_scale))
        pm = pair_mask(mask)
        if self.cfg.equal_attention:
            alpha = pm.to(window.dtype) / pm.sum(-1, keepdim=True).clamp_min(1)
        else:
            wv = self.attn_w(v_self)
            k = self.cfg.attn_dim
            s = (wv @ self.attn_a[:k]).unsqueeze(-1) + (wv @ self.attn_a[k:]).unsqueeze(-2)
            alpha = masked_softmax(F.leaky_relu(s, self.cfg.leaky_slope), pm)
        sym = alpha + alpha.transpose(-1, -2)
        safe = torch.where(sym > 0, sym, torch.ones_like(sym))
        c_ij = torch.where(sym > 0, alpha / safe, torch.zeros_like(alpha))
        e1 = self.f1_cg_e.pair_forward(v_self, v_self, c_ij, c_ij.transpose(-1, -2))
        v_social = self.f1_cg_v((alpha.unsqueeze(-1) * e1).sum(-2))
        v_social = v_social * mask.unsqueeze(-1)
        v_self = v_self * mask.unsqueeze(-1)
        return NodeAttributes(v_self, v_social, torch.cat([v_self, v_social], -1), alpha, mask)

    def edge_logits(self, nodes: NodeAttributes) -> torch.Tensor:
        """Second edge update; returns type logits e2 for every ordered pair."""
        return self.f2_cg_e.pair_forward(nodes.v1, nodes.v1)

    # -- hypergraph --------------------------------------------------------
    def infer_hypergraph_topology(self, nodes: NodeAttributes, mode: str = "hard",
                                  tau: float | None = None,
                                  generator: torch.Generator | None = None) -> IncidenceState:
        tau = self.cfg.tau if tau is None else tau
        logits = self.f_pim(nodes.v1)
        member = nodes.mask.unsqueeze(-1).to(logits.dtype)
        incidence = binary_gumbel(logits, tau, mode, generator) * member
        return IncidenceState(logits, torch.sigmoid(logits) * member, incidence)

    def hypergraph_message_pass(self, nodes: NodeAttributes, incidence: torch.Tensor,
                                ) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """Returns (hyperedge type logits e2_HG [B, M, L], v1_HG [B, N, d], alpha_mi [B, M, N]).

        Hyperedges with fewer than two members are treated as empty.
        """
        i_hg = incidence
        v1 = nodes.v1
        count = i_hg.sum(-2)  # [B, M]
        valid = (count.detach() > 1.0 + 1e-9).to(v1.dtype)
        i_eff = i_hg * valid.unsqueeze(-2)
        # mean pairwise attention over ordered member pairs (alpha has zero diagonal)
        pair_sum = torch.einsum("bim,bij,bjm->bm", i_eff, nodes.alpha, i_eff)
        ordered_pairs = count * (count - 1.0)
        alpha_m = torch.where(valid > 0, pair_sum / ordered_pairs.clamp_min(1e-12),
                              torch.zeros_like(pair_sum))
        node_w = i_eff * alpha_m.unsqueeze(-2)  # [B, N, M]
        norm = node_w.sum(-1, keepdim=True)
        node_w = torch.where(norm > 0, node_w / norm.clamp_min(1e-30), torch.zeros_like(node_w))
        e1 = self.f1_hg_e(torch.einsum("bnm,bnd->bmd", node_w, v1))  # [B, M, d]

        member_w = i_eff.transpose(-1, -2)  # [B, M, N]
        if self.cfg.equal_attention:
            deg = member_w.sum(-1, keepdim=True)
            alpha_mi = torch.where(deg > 0, member_w / deg.clamp_min(1e-30), torch.zeros_like(member_w))
        else:
            k = self.cfg.attn_dim
            s = (self.hg_w1(e1) @ self.hg_a[:k]).unsqueeze(-1) + \
                (self.hg_w2(v1) @ self.hg_a[k:]).unsqueeze(-2)
            alpha_mi = weighted_softmax(F.leaky_relu(s, self.cfg.leaky_slope), member_w)
        v1_hg = self.f1_hg_v(torch.einsum("bmn,bmd->bnd", alpha_mi, e1))
        e2 = self.f2_hg_e(torch.einsum("bnm,bnd->bmd", i_eff, v1_hg))
        return e2, v1_hg, alpha_mi

    # -- relation types ----------------------------------------------------
    @staticmethod
    def infer_relation_types(logits_cg: torch.Tensor, logits_hg: torch.Tensor, incidence: torch.Tensor,
                             tau: float, mode: str = STOCHASTIC,
                             generator: torch.Generator | None = None) -> RelationState:
        z_cg = gumbel_softmax(logits_cg, tau, mode, generator)
        z_hg = gumbel_softmax(logits_hg, tau, mode, generator)
        return RelationState(z_cg, z_hg, incidence, logits_cg, logits_hg)
