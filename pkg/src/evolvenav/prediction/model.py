"""Relation-conditioned trajectory predictor with evolving relations."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import torch
import torch.nn as nn

from ..relational.encoder import EncoderConfig, RelationalEncoder, RelationState
from ..relational.gumbel import EXPECTED, STOCHASTIC, gumbel_softmax
from .decoder import RelationDecoder
from .evolution import RelationEvolver


@dataclass
class PredictorConfig:
    T_h: int = 4
    T_f: int = 5
    T_p: int = 1
    tau_gap: int | None = None  # defaults to T_p
    L_CG: int = 3
    L_HG: int = 3
    M: int = 5
    sigma2: float = 0.05
    alpha_kl_cg: float = 1e-4
    alpha_kl_hg: float = 1e-4
    alpha_sm_cg: float = 1e-3
    alpha_sm_hg: float = 1e-3
    alpha_sh_cg: float = 1e-3
    alpha_sh_hg: float = 1e-3
    alpha_sp_cg: float = 1e-3
    alpha_sp_hg: float = 1e-3
    hidden: int = 128
    embed: int = 128
    attn_dim: int = 64
    evolve_hidden: int = 128
    evolve_layers: int = 2
    tau: float = 0.5
    leaky_slope: float = 0.2
    disp_scale: float = 4.0
    use_cg: bool = True
    use_hg: bool = True
    dynamic: bool = True
    equal_attention: bool = False

    def __post_init__(self):
        if self.tau_gap is None:
            self.tau_gap = self.T_p
        self.validate()

    def validate(self) -> None:
        if not 1 <= self.T_p <= self.T_f:
            raise ValueError(f"need 1 <= T_p <= T_f, got T_p={self.T_p}, T_f={self.T_f}")
        if self.tau_gap != self.T_p:
            raise ValueError("relations are re-inferred once per prediction period: tau_gap must equal T_p")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")
        if self.L_CG < 2 or self.L_HG < 2:
            raise ValueError("need at least one relation type besides 'no relation'")
        if not (self.use_cg or self.use_hg):
            raise ValueError("at least one of use_cg / use_hg must be enabled")

    @property
    def n_periods(self) -> int:
        return math.ceil(self.T_f / self.tau_gap)

    def encoder_config(self) -> EncoderConfig:
        return EncoderConfig(history=self.T_h, hidden=self.hidden, embed=self.embed,
                             attn_dim=self.attn_dim, edge_types=self.L_CG,
                             hyperedge_types=self.L_HG, max_hyperedges=self.M, tau=self.tau,
                             equal_attention=self.equal_attention, leaky_slope=self.leaky_slope,
                             disp_scale=self.disp_scale)


# Ablation columns: (use_cg, use_hg, dynamic, sm, sh, sp, equal_attention)
ABLATIONS = {
    "scg": (True, False, False, False, False, False, False),
    "shg": (False, True, False, False, False, False, False),
    "scg_shg": (True, True, False, False, False, False, False),
    "dcg_dhg": (True, True, True, False, False, False, False),
    "dcg_dhg_sm": (True, True, True, True, False, False, False),
    "dcg_dhg_sm_sh": (True, True, True, True, True, False, False),
    "full": (True, True, True, True, True, True, False),
    "equal_attention": (True, True, True, True, True, True, True),
}


def ablation_config(name: str, base: PredictorConfig | None = None) -> PredictorConfig:
    """Config for one ablation column; disabled regularizers get zero weight."""
    if name not in ABLATIONS:
        raise ValueError(f"unknown ablation {name!r}; choose from {sorted(ABLATIONS)}")
    base = base or PredictorConfig()
    cg, hg, dyn, sm, sh, sp, eq = ABLATIONS[name]
    kw = dict(use_cg=cg, use_hg=hg, dynamic=dyn, equal_attention=eq)
    for reg, on in (("sm", sm), ("sh", sh), ("sp", sp)):
        if not on:
            kw[f"alpha_{reg}_cg"] = 0.0
            kw[f"alpha_{reg}_hg"] = 0.0
    return replace(base, **kw)


@dataclass
class RelationStep:
    """Relations used during one prediction period."""
    state: RelationState
    q_cg: torch.Tensor | None   # [B, N, N, L_CG] evolved type distribution
    q_hg: torch.Tensor | None   # [B, M, L_HG]
    pim: torch.Tensor | None    # [B, N, M]


@dataclass
class PredictionRollout:
    means: torch.Tensor                      # [B, N, T_f, 2]
    relations: list = field(default_factory=list)  # RelationStep per period
    mask: torch.Tensor | None = None         # [B, N]


class RelationalPredictor(nn.Module):
    def __init__(self, cfg: PredictorConfig):
        super().__init__()
        self.cfg = cfg
        self.encoder = RelationalEncoder(cfg.encoder_config())
        self.decoder = RelationDecoder(cfg.embed, cfg.hidden, cfg.L_CG, cfg.L_HG, cfg.T_p)
        self.evolve_cg = RelationEvolver(cfg.L_CG, cfg.evolve_hidden, cfg.evolve_layers)
        self.evolve_hg = RelationEvolver(cfg.L_HG, cfg.evolve_hidden, cfg.evolve_layers)

    # -- parameter partition used by the warm-up stage -----------------------
    def hypergraph_parameters(self):
        yield from self.encoder.hypergraph_parameters()
        yield from self.decoder.hypergraph_parameters()
        yield from self.evolve_hg.parameters()

    def pairwise_parameters(self):
        yield from self.encoder.pairwise_parameters()
        yield from self.decoder.pairwise_parameters()
        yield from self.evolve_cg.parameters()

    # ------------------------------------------------------------------------
    def infer_relations(self, nodes, hidden, *, use_cg, use_hg, relation_mode, incidence_mode,
                        generator, null_relations) -> tuple[RelationStep, tuple]:
        cfg = self.cfg
        b, n = nodes.mask.shape
        like = nodes.v1
        h_cg, h_hg = hidden
        q_cg = q_hg = pim = None
        if use_cg:
            logits_cg = self.encoder.edge_logits(nodes)
            if cfg.dynamic:
                logits_cg, h_cg = self.evolve_cg(logits_cg, h_cg)
            q_cg = torch.softmax(logits_cg, -1)
            z_cg = gumbel_softmax(logits_cg, cfg.tau, relation_mode, generator)
        else:
            logits_cg = None
            z_cg = like.new_zeros(b, n, n, cfg.L_CG)
        if use_hg:
            inc = self.encoder.infer_hypergraph_topology(nodes, incidence_mode, cfg.tau, generator)
            logits_hg, _, _ = self.encoder.hypergraph_message_pass(nodes, inc.incidence)
            if cfg.dynamic:
                logits_hg, h_hg = self.evolve_hg(logits_hg, h_hg)
            q_hg = torch.softmax(logits_hg, -1)
            z_hg = gumbel_softmax(logits_hg, cfg.tau, relation_mode, generator)
            incidence, pim = inc.incidence, inc.pim
        else:
            logits_hg = None
            z_hg = like.new_zeros(b, cfg.M, cfg.L_HG)
            incidence = like.new_zeros(b, n, cfg.M)
        if null_relations:
            z_cg = torch.zeros_like(z_cg)
            z_cg[..., 0] = 1.0
            z_hg = torch.zeros_like(z_hg)
            z_hg[..., 0] = 1.0
        state = RelationState(z_cg, z_hg, incidence, logits_cg, logits_hg)
        return RelationStep(state, q_cg, q_hg, pim), (h_cg, h_hg)

    def decode_period(self, window: torch.Tensor, nodes, relations: RelationState | None,
                      use_cg: bool, use_hg: bool) -> torch.Tensor:
        """Mean positions for the next T_p steps, [B, N, T_p, 2]."""
        v_tilde = self.decoder.aggregate(nodes, relations, use_cg, use_hg)
        disp = self.decoder.displacements(v_tilde)
        return window[..., -1:, :] + torch.cumsum(disp, dim=-2)

    def rollout(self, history: torch.Tensor, mask: torch.Tensor | None = None, *,
                future: torch.Tensor | None = None, horizon: int | None = None,
                relation_mode: str = STOCHASTIC, incidence_mode: str = "hard",
                generator: torch.Generator | None = None, use_hg: bool | None = None,
                relation_free: bool = False, null_relations: bool = False) -> PredictionRollout:
        """Predict ``horizon`` steps from ``history`` [B, N, T_h, 2].

        With ``future`` given (teacher forcing), each period is re-seeded with
        ground truth; otherwise predictions are fed back as observations.
        """
        cfg = self.cfg
        horizon = cfg.T_f if horizon is None else horizon
        b, n = history.shape[:2]
        if mask is None:
            mask = torch.ones(b, n, dtype=torch.bool, device=history.device)
        use_cg = cfg.use_cg
        use_hg = cfg.use_hg if use_hg is None else (use_hg and cfg.use_hg)
        if future is not None:
            seq = torch.cat([history, future], dim=-2)
        window = history[..., -cfg.T_h:, :]
        hidden = (None, None)
        steps, means = [], []
        current = None
        produced = 0
        beta = 0
        while produced < horizon:
            nodes = self.encoder.encode_observation_graph(window, mask)
            relations = None
            if not relation_free:
                if cfg.dynamic or current is None:
                    current, hidden = self.infer_relations(
                        nodes, hidden, use_cg=use_cg, use_hg=use_hg, relation_mode=relation_mode,
                        incidence_mode=incidence_mode, generator=generator,
                        null_relations=null_relations)
                relations = current.state
                steps.append(current)
            mu = self.decode_period(window, nodes, relations, use_cg, use_hg)
            k = min(cfg.T_p, horizon - produced)
            means.append(mu[..., :k, :])
            produced += k
            beta += 1
            if future is not None:
                start = beta * cfg.T_p
                window = seq[..., start + history.shape[-2] - cfg.T_h: start + history.shape[-2], :]
            else:
                window = torch.cat([window, mu], dim=-2)[..., -cfg.T_h:, :]
        return PredictionRollout(torch.cat(means, dim=-2), steps, mask)

    @torch.no_grad()
    def sample(self, history: torch.Tensor, mask: torch.Tensor | None = None, n_samples: int = 20,
               relation_mode: str = STOCHASTIC, generator: torch.Generator | None = None,
               horizon: int | None = None) -> torch.Tensor:
        """S rollouts with resampled relation latents; returns [S, B, N, T, 2]."""
        b, n = history.shape[:2]
        if mask is None:
            mask = torch.ones(b, n, dtype=torch.bool, device=history.device)
        rep = history.unsqueeze(0).expand(n_samples, *history.shape).reshape(-1, *history.shape[1:])
        rep_mask = mask.unsqueeze(0).expand(n_samples, *mask.shape).reshape(-1, n)
        inc_mode = "hard" if relation_mode == STOCHASTIC else EXPECTED
        out = self.rollout(rep, rep_mask, relation_mode=relation_mode, incidence_mode=inc_mode,
                           generator=generator, horizon=horizon)
        return out.means.reshape(n_samples, b, *out.means.shape[1:])


def gaussian_log_density(x: torch.Tensor, mu: torch.Tensor, sigma2: float) -> torch.Tensor:
    """Isotropic 2-D Gaussian log-density per point, [..., 2] -> [...]."""
    d2 = ((x - mu) ** 2).sum(-1)
    return -math.log(2 * math.pi * sigma2) - d2 / (2 * sigma2)
