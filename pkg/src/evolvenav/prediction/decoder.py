from __future__ import annotations

import torch
import torch.nn as nn

from ..relational.encoder import NodeAttributes, RelationState, pair_mask
from ..relational.layers import MLP, PairMLP


def effective_incidence(incidence: torch.Tensor) -> torch.Tensor:
    """Drop hyperedges with fewer than two members."""
    count = incidence.sum(-2, keepdim=True).detach()
    return incidence * (count > 1.0 + 1e-9).to(incidence.dtype)


class RelationDecoder(nn.Module):
    """Relation-conditioned displacement decoder for one prediction period.

    Type 0 of both edge and hyperedge types is the hard zero map: probability
    mass on "no relation" sends no message. The node update also sees the
    agent's own history embedding so the relation-free decoder still models
    individual dynamics.
    """

    def __init__(self, embed: int, hidden: int, edge_types: int, hyperedge_types: int, period: int):
        super().__init__()
        d = embed
        self.d = d
        self.period = period
        self.f_cg_e = nn.ModuleDict({f"type{l}": PairMLP(2 * d, 2 * d, hidden, d)
                                     for l in range(1, edge_types)})
        self.f_hg_e = nn.ModuleDict({f"type{l}": MLP(2 * d, hidden, d)
                                     for l in range(1, hyperedge_types)})
        self.f_v = MLP(3 * d, hidden, d)
        self.f_out = MLP(d, hidden, 2 * period)

    def pairwise_parameters(self):
        for name, p in self.named_parameters():
            if not name.startswith("f_hg_e"):
                yield p

    def hypergraph_parameters(self):
        return self.f_hg_e.parameters()

    def edge_messages(self, nodes: NodeAttributes, z_cg: torch.Tensor) -> torch.Tensor:
        """Sum over j != i of the type-mixed edge attribute; [B, N, d]."""
        pm = pair_mask(nodes.mask).unsqueeze(-1).to(nodes.v1.dtype)
        out = torch.zeros_like(nodes.v_self)
        for name, f in self.f_cg_e.items():
            l = int(name[4:])
            e = z_cg[..., l:l + 1] * f.pair_forward(nodes.v1, nodes.v1)
            out = out + (e * pm).sum(-2)
        return out

    def hyperedge_messages(self, nodes: NodeAttributes, z_hg: torch.Tensor,
                           incidence: torch.Tensor) -> torch.Tensor:
        """Sum over hyperedges containing i of the type-mixed hyperedge attribute; [B, N, d].

        A hyperedge's attribute is computed from the mean of its members' features.
        """
        inc = effective_incidence(incidence)
        size = inc.sum(-2).unsqueeze(-1).clamp_min(1.0)
        pooled = torch.einsum("bnm,bnd->bmd", inc, nodes.v1) / size
        e = torch.zeros(*pooled.shape[:-1], self.d, dtype=pooled.dtype, device=pooled.device)
        for name, f in self.f_hg_e.items():
            l = int(name[4:])
            e = e + z_hg[..., l:l + 1] * f(pooled)
        return torch.einsum("bnm,bmd->bnd", inc, e)

    def aggregate(self, nodes: NodeAttributes, relations: RelationState | None,
                  use_cg: bool = True, use_hg: bool = True) -> torch.Tensor:
        zeros = torch.zeros_like(nodes.v_self)
        cg = zeros if relations is None or not use_cg else self.edge_messages(nodes, relations.z_cg)
        hg = zeros if relations is None or not use_hg else \
            self.hyperedge_messages(nodes, relations.z_hg, relations.incidence)
        return self.f_v(torch.cat([nodes.v_self, cg, hg], -1))

    def displacements(self, v_tilde: torch.Tensor) -> torch.Tensor:
        """[B, N, d] -> mean displacements [B, N, T_p, 2]."""
        return self.f_out(v_tilde).unflatten(-1, (self.period, 2))
