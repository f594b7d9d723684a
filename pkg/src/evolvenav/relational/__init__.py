"""Latent pairwise/group-wise relation inference (graph + hypergraph encoder)."""
from .encoder import (EncoderConfig, IncidenceState, NodeAttributes, RelationalEncoder,
                      RelationState, StructuralError, history_features, pair_mask)
from .gumbel import EXPECTED, STOCHASTIC, binary_gumbel, gumbel_softmax, sample_gumbel
from .layers import MLP, PairMLP, masked_softmax, weighted_softmax

__all__ = [
    "EXPECTED", "EncoderConfig", "IncidenceState", "MLP", "NodeAttributes", "PairMLP",
    "RelationState", "RelationalEncoder", "STOCHASTIC", "StructuralError", "binary_gumbel",
    "gumbel_softmax", "history_features", "masked_softmax", "pair_mask", "sample_gumbel",
    "weighted_softmax",
]
