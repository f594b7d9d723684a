from __future__ import annotations

import torch
import torch.nn as nn
import torch.nn.functional as F


class MLP(nn.Module):
    """Stack of linear layers with ELU in between (no activation on the output).

    Layers are registered as ``layer0``, ``layer1``, ... so parameter names read
    ``<module>.layer0.weight`` in checkpoints.
    """

    def __init__(self, in_dim: int, hidden: int, out_dim: int, n_layers: int = 3):
        super().__init__()
        dims = [in_dim] + [hidden] * (n_layers - 1) + [out_dim]
        self.n_layers = n_layers
        for k in range(n_layers):
            setattr(self, f"layer{k}", nn.Linear(dims[k], dims[k + 1]))

    def hidden_forward(self, h: torch.Tensor) -> torch.Tensor:
        """Everything after the first linear layer, given its pre-activation."""
        for k in range(1, self.n_layers):
            h = getattr(self, f"layer{k}")(F.elu(h))
        return h

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.hidden_forward(self.layer0(x))


class PairMLP(MLP):
    """MLP over concatenated node pairs ``[a_i, b_j]`` for all (i, j).

    The first layer is applied per node and broadcast, so the cost of that layer
    is O(N) instead of O(N^2). Mathematically identical to ``MLP`` applied to
    the explicit concatenation.
    """

    def __init__(self, dim_a: int, dim_b: int, hidden: int, out_dim: int, n_layers: int = 3):
        super().__init__(dim_a + dim_b, hidden, out_dim, n_layers)
        self.dim_a = dim_a

    def pair_forward(self, a: torch.Tensor, b: torch.Tensor,
                     scale_a: torch.Tensor | None = None,
                     scale_b: torch.Tensor | None = None) -> torch.Tensor:
        """a: [..., N, dim_a], b: [..., N, dim_b] -> [..., N, N, out].

        Optional ``scale_a``/``scale_b`` ([..., N, N]) multiply a_i / b_j per pair
        before the first layer.
        """
        w = self.layer0.weight
        ha = a @ w[:, : self.dim_a].T
        hb = b @ w[:, self.dim_a:].T
        ha = ha.unsqueeze(-2)  # [..., N, 1, h]
        hb = hb.unsqueeze(-3)  # [..., 1, N, h]
        if scale_a is not None:
            ha = ha * scale_a.unsqueeze(-1)
        if scale_b is not None:
            hb = hb * scale_b.unsqueeze(-1)
        return self.hidden_forward(ha + hb + self.layer0.bias)


def masked_softmax(scores: torch.Tensor, mask: torch.Tensor, dim: int = -1) -> torch.Tensor:
    """Softmax restricted to ``mask``; rows without any valid entry become zeros."""
    out = torch.softmax(scores.masked_fill(~mask, -1e30), dim=dim)
    return out * mask


def weighted_softmax(scores: torch.Tensor, weights: torch.Tensor, dim: int = -1) -> torch.Tensor:
    """``weights * exp(s) / sum(weights * exp(s))``.

    Equals a masked softmax when ``weights`` is binary, but stays differentiable
    in relaxed (non-binary) membership weights.
    """
    shift = scores.masked_fill(weights <= 0, float("-inf")).amax(dim=dim, keepdim=True)
    shift = torch.nan_to_num(shift, neginf=0.0).detach()
    # entries with zero weight may sit above the shift; the clamp keeps them finite
    e = weights * torch.exp((scores - shift).clamp(max=50.0))
    denom = e.sum(dim=dim, keepdim=True)
    return torch.where(denom > 0, e / denom.clamp_min(1e-30), torch.zeros_like(e))
