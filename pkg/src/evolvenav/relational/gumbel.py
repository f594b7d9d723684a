from __future__ import annotations

import torch

STOCHASTIC = "stochastic"
EXPECTED = "expected"


def _check_tau(tau: float) -> None:
    if not tau > 0:
        raise ValueError(f"Gumbel temperature must be positive, got {tau}")


def sample_gumbel(shape, like: torch.Tensor, generator: torch.Generator | None = None,
                  eps: float = 1e-20) -> torch.Tensor:
    u = torch.rand(shape, generator=generator, dtype=like.dtype, device=like.device)
    return -torch.log(-torch.log(u + eps) + eps)


def sample_logistic(shape, like: torch.Tensor, generator: torch.Generator | None = None,
                    eps: float = 1e-20) -> torch.Tensor:
    """Difference of two Gumbel(0, 1) draws, i.e. Logistic(0, 1)."""
    u = torch.rand(shape, generator=generator, dtype=like.dtype, device=like.device)
    return torch.log(u + eps) - torch.log1p(-u + eps)


def gumbel_softmax(logits: torch.Tensor, tau: float, mode: str = STOCHASTIC,
                   generator: torch.Generator | None = None) -> torch.Tensor:
    """``softmax((logits + g) / tau)`` over the last axis; ``g = 0`` in expected mode."""
    _check_tau(tau)
    if mode == STOCHASTIC:
        logits = logits + sample_gumbel(logits.shape, logits, generator)
    elif mode != EXPECTED:
        raise ValueError(f"unknown relation mode {mode!r}")
    return torch.softmax(logits / tau, dim=-1)


def binary_gumbel(logits: torch.Tensor, tau: float, mode: str = "hard",
                  generator: torch.Generator | None = None) -> torch.Tensor:
    """Two-class Gumbel-Softmax on membership logits.

    ``hard``: 0/1 forward values with the relaxed sample's gradient
    (straight-through). ``soft``: the relaxed sample itself. ``expected``:
    deterministic threshold of sigmoid(logits) at 0.5.
    """
    _check_tau(tau)
    if mode == EXPECTED:
        return (logits > 0).to(logits.dtype)
    soft = torch.sigmoid((logits + sample_logistic(logits.shape, logits, generator)) / tau)
    if mode == "soft":
        return soft
    if mode != "hard":
        raise ValueError(f"unknown incidence mode {mode!r}")
    hard = (soft > 0.5).to(soft.dtype)
    # forward value stays exactly 0/1
    return hard + (soft - soft.detach())
