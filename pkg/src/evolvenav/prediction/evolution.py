from __future__ import annotations

import torch
import torch.nn as nn


class RelationEvolver(nn.Module):
    """Recurrent evolution of relation-type distributions across inference steps.

    Each edge (or hyperedge) is an independent sequence: the GRU reads the
    encoder's type distribution at step beta and emits a logit correction. The
    correction layer starts at zero, so an untrained evolver passes the
    encoder's distribution through unchanged.
    """

    def __init__(self, n_types: int, hidden: int = 128, n_layers: int = 2):
        super().__init__()
        self.gru = nn.GRU(n_types, hidden, num_layers=n_layers, batch_first=False)
        self.out = nn.Linear(hidden, n_types)
        nn.init.zeros_(self.out.weight)
        nn.init.zeros_(self.out.bias)

    def forward(self, logits: torch.Tensor, hidden: torch.Tensor | None = None,
                ) -> tuple[torch.Tensor, torch.Tensor]:
        """logits: [..., L] encoder logits -> (evolved logits [..., L], new hidden)."""
        shape = logits.shape
        q = torch.softmax(logits, -1).reshape(1, -1, shape[-1])
        if hidden is None:
            hidden = q.new_zeros(self.gru.num_layers, q.shape[1], self.gru.hidden_size)
        h_seq, hidden = self.gru(q, hidden)
        evolved = logits + self.out(h_seq[0]).reshape(shape)
        return evolved, hidden
