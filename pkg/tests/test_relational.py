import numpy as np
import pytest
import torch
from hypothesis import given, settings, strategies as st

from evolvenav.relational import gumbel
from evolvenav.relational.encoder import (EncoderConfig, RelationalEncoder, StructuralError, history_features,
                                          pair_mask)
from evolvenav.relational.gumbel import binary_gumbel, gumbel_softmax


def make_encoder(seed=0, dtype=torch.float64, **kw):
    torch.manual_seed(seed)
    cfg = EncoderConfig(hidden=16, embed=8, attn_dim=4, **kw)
    return RelationalEncoder(cfg).to(dtype)


def windows(b, n, seed=0, dtype=torch.float64):
    g = torch.Generator().manual_seed(seed)
    return torch.randn(b, n, 4, 2, generator=g, dtype=dtype)


def test_single_agent_is_structural_error():
    with pytest.raises(StructuralError):
        make_encoder().encode_observation_graph(windows(1, 1))


def test_two_agents_attend_fully_to_each_other():
    alpha = make_encoder().encode_observation_graph(windows(3, 2)).alpha
    assert torch.allclose(alpha[:, 0, 1], torch.ones(3, dtype=alpha.dtype))
    assert torch.allclose(alpha[:, 1, 0], torch.ones(3, dtype=alpha.dtype))


def test_identical_histories_give_uniform_attention():
    w = windows(1, 1).expand(1, 5, 4, 2).clone()
    alpha = make_encoder().encode_observation_graph(w).alpha[0]
    off = ~torch.eye(5, dtype=torch.bool)
    assert torch.allclose(alpha[off], torch.full((20,), 0.25, dtype=alpha.dtype))
    assert torch.all(alpha.diagonal() == 0)


def test_attention_rows_are_distributions():
    enc = make_encoder()
    for trial in range(100):
        n = 2 + trial % 6
        a = enc.encode_observation_graph(windows(1, n, seed=trial)).alpha[0]
        assert torch.all(a >= 0)
        assert torch.allclose(a.sum(-1), torch.ones(n, dtype=a.dtype), atol=1e-6)


def test_padding_mask_excluded_from_attention():
    enc = make_encoder()
    w = windows(1, 4)
    mask = torch.tensor([[True, True, True, False]])
    nodes = enc.encode_observation_graph(w, mask)
    assert torch.all(nodes.alpha[0, :3, 3] == 0)
    ref = enc.encode_observation_graph(w[:, :3])
    assert torch.allclose(nodes.alpha[0, :3, :3], ref.alpha[0])
    assert torch.allclose(nodes.v1[0, :3], ref.v1[0])


def test_history_features_layout():
    w = torch.tensor([[[0.0, 0.0], [1.0, 2.0]]])
    f = history_features(w, disp_scale=2.0)
    assert f.tolist() == [[0.0, 0.0, 0.0, 0.0, 1.0, 2.0, 2.0, 4.0]]


def test_permutation_equivariance():
    enc = make_encoder()
    w = windows(1, 5, seed=3)
    perm = torch.tensor([3, 0, 4, 1, 2])
    a = enc.encode_observation_graph(w)
    b = enc.encode_observation_graph(w[:, perm])
    assert torch.allclose(b.v_self[0], a.v_self[0, perm], atol=1e-10)
    assert torch.allclose(b.v_social[0], a.v_social[0, perm], atol=1e-10)
    assert torch.allclose(b.alpha[0], a.alpha[0][perm][:, perm], atol=1e-10)
    za = torch.softmax(enc.edge_logits(a), -1)
    zb = torch.softmax(enc.edge_logits(b), -1)
    assert torch.allclose(zb[0], za[0][perm][:, perm], atol=1e-10)
    pa = enc.infer_hypergraph_topology(a, "expected").pim
    pb = enc.infer_hypergraph_topology(b, "expected").pim
    assert torch.allclose(pb[0], pa[0, perm], atol=1e-10)


def test_pim_frequency_matches_marginal():
    logits = torch.zeros(10_000)
    g = torch.Generator().manual_seed(0)
    freq = binary_gumbel(logits, 0.5, "hard", g).mean().item()
    assert abs(freq - 0.5) <= 0.02


def test_large_negative_logits_give_empty_incidence():
    enc = make_encoder()
    nodes = enc.encode_observation_graph(windows(2, 4))
    with torch.no_grad():
        enc.f_pim.layer2.bias.fill_(-1e4)
    inc = enc.infer_hypergraph_topology(nodes, "expected")
    assert torch.all(inc.incidence == 0)


def test_hard_incidence_is_binary_with_relaxed_gradient():
    logits = torch.randn(3, 4, dtype=torch.float64, requires_grad=True)
    g = torch.Generator().manual_seed(1)
    inc = binary_gumbel(logits, 0.5, "hard", g)
    assert set(inc.detach().unique().tolist()) <= {0.0, 1.0}
    inc.sum().backward()
    assert torch.all(logits.grad > 0)


def test_soft_incidence_gradient_matches_finite_differences():
    enc = make_encoder()
    w = windows(1, 3, seed=5)
    nodes = enc.encode_observation_graph(w)
    base = enc.f_pim(nodes.v1).detach()

    def f(logits):
        g = torch.Generator().manual_seed(42)
        return binary_gumbel(logits, 0.5, "soft", g).sum()

    logits = base[..., :2].clone().requires_grad_(True)
    f(logits).backward()
    h = 1e-4
    for idx in np.ndindex(*logits.shape):
        lp, lm = base[..., :2].clone(), base[..., :2].clone()
        lp[idx] += h
        lm[idx] -= h
        fd = (f(lp) - f(lm)).item() / (2 * h)
        an = logits.grad[idx].item()
        assert abs(an - fd) <= 1e-3 * max(abs(fd), 1e-8) + 1e-10


def _message_pass(enc, n=5, m=3, seed=0):
    nodes = enc.encode_observation_graph(windows(1, n, seed=seed))
    g = torch.Generator().manual_seed(seed)
    inc = (torch.rand(1, n, m, generator=g) > 0.4).to(torch.float64)
    return nodes, inc, enc.hypergraph_message_pass(nodes, inc)


def test_hyperedge_to_node_attention_normalized():
    enc = make_encoder(max_hyperedges=3)
    for seed in range(20):
        nodes, inc, (_, _, alpha_mi) = _message_pass(enc, seed=seed)
        size = inc[0].sum(0)
        for mi in range(3):
            total = alpha_mi[0, mi].sum().item()
            if size[mi] >= 2:
                assert abs(total - 1.0) < 1e-9
                assert torch.all(alpha_mi[0, mi][inc[0, :, mi] == 0] == 0)
            else:
                assert total == 0.0


def test_singleton_hyperedges_carry_no_messages():
    enc = make_encoder(max_hyperedges=2)
    nodes = enc.encode_observation_graph(windows(1, 3))
    lone = torch.tensor([[[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]]], dtype=torch.float64)
    none = torch.zeros_like(lone)
    a = enc.hypergraph_message_pass(nodes, lone)
    b = enc.hypergraph_message_pass(nodes, none)
    for x, y in zip(a, b):
        assert torch.equal(x, y)


def test_node_to_hyperedge_weights_normalized():
    # recompute the normalized node -> hyperedge weights of the message pass
    enc = make_encoder(max_hyperedges=3)
    with torch.no_grad():
        nodes, inc, _ = _message_pass(enc, seed=4)
    i_eff = inc * (inc.sum(-2, keepdim=True) > 1)
    n_m = i_eff.sum(-2)
    a = nodes.alpha[0]
    alpha_m = []
    for m in range(3):
        members = torch.nonzero(i_eff[0, :, m]).flatten().tolist()
        s = sum(a[i, j] for i in members for j in members if i != j)
        alpha_m.append(s / (n_m[0, m] * (n_m[0, m] - 1)) if len(members) > 1 else 0.0)
    w = i_eff[0] * torch.tensor([float(x) for x in alpha_m], dtype=torch.float64)
    rows = w.sum(-1)
    normed = w[rows > 0] / rows[rows > 0, None]
    assert torch.allclose(normed.sum(-1), torch.ones(len(normed), dtype=torch.float64))


def test_equal_attention_coincides_on_identical_nodes():
    w = windows(1, 1).expand(1, 4, 4, 2).clone()
    inc = torch.tensor([[[1.0, 1.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]], dtype=torch.float64)
    att = make_encoder(seed=2, max_hyperedges=2)
    eq = make_encoder(seed=2, max_hyperedges=2, equal_attention=True)
    eq.load_state_dict(att.state_dict())
    na, ne = att.encode_observation_graph(w), eq.encode_observation_graph(w)
    assert torch.allclose(na.v1, ne.v1)
    for x, y in zip(att.hypergraph_message_pass(na, inc), eq.hypergraph_message_pass(ne, inc)):
        assert torch.allclose(x, y)
    w2 = windows(1, 4, seed=9)
    assert not torch.allclose(att.encode_observation_graph(w2).v1, eq.encode_observation_graph(w2).v1)


def test_expected_mode_equal_logits_uniform():
    z = gumbel_softmax(torch.zeros(4, 3), 0.5, "expected")
    assert torch.allclose(z, torch.full((4, 3), 1 / 3))


def test_high_temperature_flattens():
    g = torch.Generator().manual_seed(0)
    logits = torch.rand(100, 4, generator=g) * 2 - 1
    z = gumbel_softmax(logits, 100.0, "expected")
    assert torch.all(z.max(-1).values - z.min(-1).values <= 0.02)


def test_low_temperature_argmax_frequency():
    g = torch.Generator().manual_seed(0)
    logits = torch.tensor([5.0, 0.0, 0.0]).expand(10_000, 3)
    z = gumbel_softmax(logits, 0.1, "stochastic", g)
    assert (z.argmax(-1) == 0).float().mean().item() >= 0.98


@pytest.mark.parametrize("tau", [0.0, -1.0])
def test_nonpositive_temperature_rejected(tau):
    with pytest.raises(ValueError):
        gumbel_softmax(torch.zeros(3), tau)
    with pytest.raises(ValueError):
        binary_gumbel(torch.zeros(3), tau)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 6), st.integers(0, 1000), st.floats(0.1, 5.0))
def test_relation_types_on_simplex(n, seed, tau):
    enc = make_encoder()
    nodes = enc.encode_observation_graph(windows(1, n, seed=seed))
    inc = enc.infer_hypergraph_topology(nodes, "hard", generator=torch.Generator().manual_seed(seed))
    e2_hg, _, _ = enc.hypergraph_message_pass(nodes, inc.incidence)
    rel = enc.infer_relation_types(enc.edge_logits(nodes), e2_hg, inc.incidence, tau,
                                   generator=torch.Generator().manual_seed(seed))
    for z in (rel.z_cg, rel.z_hg):
        assert torch.all(z >= 0)
        assert torch.allclose(z.sum(-1), torch.ones(z.shape[:-1], dtype=z.dtype), atol=1e-6)
    assert torch.all((inc.pim >= 0) & (inc.pim <= 1))
    assert set(inc.incidence.detach().unique().tolist()) <= {0.0, 1.0}


def test_seeded_encoder_is_deterministic():
    enc = make_encoder()
    nodes = enc.encode_observation_graph(windows(2, 4))
    a = enc.infer_hypergraph_topology(nodes, "hard", generator=torch.Generator().manual_seed(3)).incidence
    b = enc.infer_hypergraph_topology(nodes, "hard", generator=torch.Generator().manual_seed(3)).incidence
    assert torch.equal(a, b)


def test_pair_mask():
    pm = pair_mask(torch.tensor([[True, True, False]]))
    assert pm[0].tolist() == [[False, True, False], [True, False, False], [False, False, False]]


def test_encoder_gradients_match_finite_differences():
    enc = make_encoder(seed=1, max_hyperedges=2, edge_types=2, hyperedge_types=2)
    w = windows(1, 3, seed=2)

    def scalar():
        nodes = enc.encode_observation_graph(w)
        inc = enc.infer_hypergraph_topology(nodes, "soft", generator=torch.Generator().manual_seed(7))
        e2_hg, _, _ = enc.hypergraph_message_pass(nodes, inc.incidence)
        rel = enc.infer_relation_types(enc.edge_logits(nodes), e2_hg, inc.incidence, 0.5,
                                       generator=torch.Generator().manual_seed(8))
        coef = torch.linspace(0.5, 1.5, rel.z_cg.numel(), dtype=w.dtype).view_as(rel.z_cg)
        return (coef * rel.z_cg).sum() + (rel.z_hg[..., 1] ** 2).sum()

    enc.zero_grad()
    scalar().backward()
    h = 1e-4
    with torch.no_grad():
        for name, p in enc.named_parameters():
            flat = p.view(-1)
            for k in range(0, flat.numel(), max(1, flat.numel() // 3)):
                old = flat[k].item()
                flat[k] = old + h
                fp = scalar().item()
                flat[k] = old - h
                fm = scalar().item()
                flat[k] = old
                fd = (fp - fm) / (2 * h)
                an = p.grad.view(-1)[k].item()
                assert abs(an - fd) <= 1e-3 * max(abs(fd), abs(an)) + 1e-7, name
