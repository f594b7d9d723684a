import math

import numpy as np
import pytest
import torch
from hypothesis import given, settings, strategies as st

from evolvenav.checkpoint import VersionError, load_predictor, read_checkpoint, save_checkpoint, save_predictor
from evolvenav.crowd_sim import Episode, make_group_scenes
from evolvenav.prediction import (ABLATIONS, CURVE_COLUMNS, LossBreakdown, MetricError, PredictionRollout,
                                  PredictorConfig, RelationalPredictor, RelationStep, TrainConfig,
                                  TrainingError, ablation_config, compute_losses, gaussian_log_density,
                                  hyperedge_labels, majority_cluster_accuracy, make_windows, minade_minfde,
                                  train_predictor)
from evolvenav.prediction.data import to_batch, window_starts
from evolvenav.prediction.evolution import RelationEvolver
from evolvenav.prediction.losses import EPS, entropy, kl_categorical
from evolvenav.relational.encoder import RelationState

SMALL = dict(hidden=16, embed=8, attn_dim=4, evolve_hidden=8)


def make_model(seed=0, dtype=torch.float64, **kw):
    torch.manual_seed(seed)
    return RelationalPredictor(PredictorConfig(**{**SMALL, **kw})).to(dtype)


def history(b=2, n=4, t=4, seed=0):
    g = torch.Generator().manual_seed(seed)
    return torch.randn(b, n, t, 2, generator=g, dtype=torch.float64)


def relations_for(model, hist, seed=0, mode="stochastic"):
    nodes = model.encoder.encode_observation_graph(hist)
    step, _ = model.infer_relations(nodes, (None, None), use_cg=True, use_hg=True, relation_mode=mode,
                                    incidence_mode="hard", generator=torch.Generator().manual_seed(seed),
                                    null_relations=False)
    return nodes, step.state


# -- decoder aggregation ----------------------------------------------------
def test_type_zero_mass_gives_zero_messages():
    model = make_model()
    nodes, rel = relations_for(model, history())
    z_cg = torch.zeros_like(rel.z_cg)
    z_cg[..., 0] = 1
    z_hg = torch.zeros_like(rel.z_hg)
    z_hg[..., 0] = 1
    dec = model.decoder
    assert torch.all(dec.edge_messages(nodes, z_cg) == 0)
    assert torch.all(dec.hyperedge_messages(nodes, z_hg, rel.incidence) == 0)


def test_one_hot_type_selects_single_branch():
    model = make_model()
    nodes, rel = relations_for(model, history())
    z = torch.zeros_like(rel.z_cg)
    z[..., 2] = 1
    pm = (~torch.eye(4, dtype=torch.bool)).to(torch.float64)[None, :, :, None]
    branch = model.decoder.f_cg_e["type2"].pair_forward(nodes.v1, nodes.v1)
    assert torch.allclose(model.decoder.edge_messages(nodes, z), (branch * pm).sum(-2))


def test_random_mixture_matches_loop_oracle():
    model = make_model()
    nodes, rel = relations_for(model, history(1, 3))
    dec = model.decoder
    v1 = nodes.v1[0]
    d = dec.d
    cg = torch.zeros(3, d, dtype=torch.float64)
    for i in range(3):
        for j in range(3):
            if i == j:
                continue
            for l in range(1, 3):
                f = dec.f_cg_e[f"type{l}"]
                cg[i] += rel.z_cg[0, i, j, l] * f(torch.cat([v1[i], v1[j]]))
    inc = rel.incidence[0]
    hg = torch.zeros(3, d, dtype=torch.float64)
    for m in range(inc.shape[1]):
        members = [i for i in range(3) if inc[i, m] > 0]
        if len(members) < 2:
            continue
        pooled = sum(v1[i] for i in members) / len(members)
        e = sum(rel.z_hg[0, m, l] * dec.f_hg_e[f"type{l}"](pooled) for l in range(1, 3))
        for i in members:
            hg[i] += e
    expected = dec.f_v(torch.cat([nodes.v_self[0], cg, hg], -1))
    assert torch.allclose(dec.aggregate(nodes, rel)[0], expected, atol=1e-10)


# -- decoding ---------------------------------------------------------------
def test_zero_output_head_holds_last_position():
    model = make_model(T_f=3)
    with torch.no_grad():
        last = model.decoder.f_out.layer2
        last.weight.zero_()
        last.bias.zero_()
    h = history()
    out = model.rollout(h, relation_mode="expected", incidence_mode="expected")
    assert torch.equal(out.means, h[:, :, -1:].expand(-1, -1, 3, -1))


def test_log_density_at_mean():
    mu = torch.randn(5, 2, dtype=torch.float64)
    assert torch.allclose(gaussian_log_density(mu, mu, 0.05),
                          torch.full((5,), -math.log(2 * math.pi * 0.05), dtype=torch.float64))


def test_two_period_rollout_matches_hand_recursion():
    model = make_model(T_f=2, T_p=1)
    h = history(1, 3)
    out = model.rollout(h, relation_mode="expected", incidence_mode="expected")
    enc = model.encoder
    window, hidden, preds = h, None, []
    h_cg = h_hg = None
    for _ in range(2):
        nodes = enc.encode_observation_graph(window)
        lcg, h_cg = model.evolve_cg(enc.edge_logits(nodes), h_cg)
        inc = enc.infer_hypergraph_topology(nodes, "expected")
        lhg, _, _ = enc.hypergraph_message_pass(nodes, inc.incidence)
        lhg, h_hg = model.evolve_hg(lhg, h_hg)
        rel = RelationState(torch.softmax(lcg / 0.5, -1), torch.softmax(lhg / 0.5, -1), inc.incidence)
        v = model.decoder.aggregate(nodes, rel)
        nxt = window[:, :, -1] + model.decoder.f_out(v).view(1, 3, 2)
        preds.append(nxt)
        window = torch.cat([window[:, :, 1:], nxt[:, :, None]], 2)
    assert torch.allclose(out.means, torch.stack(preds, 2), atol=1e-12)
    assert len(out.relations) == 2


def test_teacher_forcing_reseeds_with_ground_truth():
    model = make_model(T_f=3)
    h, fut = history(1, 3), history(1, 3, t=3, seed=1)
    kw = dict(relation_mode="expected", incidence_mode="expected")
    out = model.rollout(h, future=fut, **kw)
    free = model.rollout(h, **kw)
    assert torch.allclose(out.means[:, :, :1], free.means[:, :, :1])
    # perturbing the ground truth of step 1 changes step 2 under teacher forcing only
    fut2 = fut.clone()
    fut2[:, :, 0] += 1.0
    assert not torch.allclose(model.rollout(h, future=fut2, **kw).means[:, :, 1], out.means[:, :, 1])
    assert torch.allclose(model.rollout(h, future=fut2, **kw).means[:, :, 0], out.means[:, :, 0])


def test_relation_history_length():
    for t_f, t_p in [(5, 1), (5, 2), (6, 3)]:
        model = make_model(T_f=t_f, T_p=t_p)
        out = model.rollout(history(), relation_mode="expected", incidence_mode="expected")
        assert len(out.relations) == math.ceil(t_f / t_p) == model.cfg.n_periods
        assert out.means.shape == (2, 4, t_f, 2)
        assert torch.isfinite(out.means).all()


def test_static_variant_reuses_relations():
    model = make_model(dynamic=False)
    out = model.rollout(history(), generator=torch.Generator().manual_seed(0))
    assert all(step is out.relations[0] for step in out.relations)


@pytest.mark.parametrize("seed", range(5))
def test_null_relations_equal_relation_free(seed):
    model = make_model(seed=seed)
    h = history(seed=seed)
    a = model.rollout(h, null_relations=True, generator=torch.Generator().manual_seed(seed))
    b = model.rollout(h, relation_free=True)
    assert torch.equal(a.means, b.means)


# -- evolution --------------------------------------------------------------
def test_untrained_evolver_passes_logits_through():
    ev = RelationEvolver(3, hidden=8).double()
    logits = torch.randn(2, 4, 3, dtype=torch.float64)
    out, hidden = ev(logits)
    assert torch.equal(out, logits)
    assert hidden.shape == (2, 8, 8)


def test_evolver_deterministic_and_on_simplex():
    torch.manual_seed(0)
    ev = RelationEvolver(3, hidden=8).double()
    torch.nn.init.normal_(ev.out.weight)
    logits = torch.randn(5, 3, dtype=torch.float64)
    a, ha = ev(logits)
    b, hb = ev(logits)
    assert torch.equal(a, b) and torch.equal(ha, hb)
    z, _ = ev(logits, ha)
    q = torch.softmax(z, -1)
    assert torch.allclose(q.sum(-1), torch.ones(5, dtype=torch.float64))


# -- losses -----------------------------------------------------------------
def _rollout_with(q_cg, q_hg, means, n_steps=1, mask=None):
    b, n = means.shape[:2]
    mask = torch.ones(b, n, dtype=torch.bool) if mask is None else mask
    state = RelationState(q_cg, q_hg, torch.zeros(b, n, q_hg.shape[1], dtype=means.dtype))
    steps = [RelationStep(state, q_cg, q_hg, None) for _ in range(n_steps)]
    return PredictionRollout(means, steps, mask)


def test_perfect_prediction_has_zero_reconstruction():
    m = history()
    q = torch.full((2, 4, 4, 3), 1 / 3, dtype=torch.float64)
    parts = compute_losses(_rollout_with(q, torch.full((2, 5, 3), 1 / 3, dtype=torch.float64), m), m,
                           PredictorConfig())
    assert parts.L_Rec.item() == 0.0


def test_uniform_distributions_kl_zero_entropy_log_l():
    cfg = PredictorConfig()
    m = history()
    q_cg = torch.full((2, 4, 4, 3), 1 / 3, dtype=torch.float64)
    q_hg = torch.full((2, 5, 3), 1 / 3, dtype=torch.float64)
    parts = compute_losses(_rollout_with(q_cg, q_hg, m), m, cfg)
    assert abs(parts.L_KL.item()) < 1e-12
    expected_sh = (cfg.alpha_sh_cg + cfg.alpha_sh_hg) * math.log(3)
    assert parts.L_SH.item() == pytest.approx(expected_sh, rel=1e-12)


def test_sparsity_with_epsilon_floor():
    cfg = PredictorConfig()
    m = history()
    none_cg = torch.zeros(2, 4, 4, 3, dtype=torch.float64)
    none_cg[..., 0] = 1
    none_hg = torch.zeros(2, 5, 3, dtype=torch.float64)
    none_hg[..., 0] = 1
    assert compute_losses(_rollout_with(none_cg, none_hg, m), m, cfg).L_SP.item() == 0.0
    other_cg = torch.roll(none_cg, 1, -1)
    other_hg = torch.roll(none_hg, 1, -1)
    sp = compute_losses(_rollout_with(other_cg, other_hg, m), m, cfg).L_SP.item()
    # KL(e_1 || e_0) = 1 * (log 1 - log eps) with the floor applied to the zero target entry
    hand = (cfg.alpha_sp_cg + cfg.alpha_sp_hg) * (0.0 - math.log(EPS))
    assert sp == pytest.approx(hand, rel=1e-12)


def test_total_is_sum_of_terms_and_smoothness_zero_iff_identical():
    cfg = PredictorConfig()
    model = make_model()
    h = history()
    fut = history(t=5, seed=3)
    out = model.rollout(h, future=fut, generator=torch.Generator().manual_seed(0))
    parts = compute_losses(out, fut, cfg)
    total = parts.L_Rec + parts.L_KL + parts.L_SM + parts.L_SH + parts.L_SP
    assert abs(parts.L_total.item() - total.item()) < 1e-9
    assert parts.L_Rec.item() >= 0 and parts.L_KL.item() >= 0 and parts.L_SM.item() >= 0
    q = torch.softmax(torch.randn(2, 4, 4, 3, dtype=torch.float64), -1)
    qh = torch.softmax(torch.randn(2, 5, 3, dtype=torch.float64), -1)
    same = compute_losses(_rollout_with(q, qh, fut, n_steps=3), fut, cfg)
    assert same.L_SM.item() == 0.0


def test_sparsity_minimized_only_at_no_relation():
    base = torch.tensor([1.0, 0.0, 0.0], dtype=torch.float64)
    g = torch.Generator().manual_seed(0)
    for _ in range(100):
        q = torch.softmax(torch.randn(3, generator=g, dtype=torch.float64) * 3, -1)
        assert kl_categorical(q, base).item() > 0


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 6), st.integers(0, 10_000))
def test_divergences_nonnegative(l, seed):
    g = torch.Generator().manual_seed(seed)
    p = torch.softmax(torch.randn(l, generator=g, dtype=torch.float64), -1)
    q = torch.softmax(torch.randn(l, generator=g, dtype=torch.float64), -1)
    assert kl_categorical(q, p).item() >= -1e-12
    assert 0 <= entropy(q).item() <= math.log(l) + 1e-12


def test_padded_agents_do_not_contribute():
    cfg = PredictorConfig()
    model = make_model()
    h, fut = history(1, 3), history(1, 3, t=5, seed=2)
    pad_h = torch.cat([h, torch.zeros(1, 1, 4, 2, dtype=torch.float64)], 1)
    pad_f = torch.cat([fut, torch.full((1, 1, 5, 2), 9.0, dtype=torch.float64)], 1)
    mask = torch.tensor([[True, True, True, False]])
    a = model.rollout(h, future=fut, relation_mode="expected", incidence_mode="expected")
    b = model.rollout(pad_h, mask, future=pad_f, relation_mode="expected", incidence_mode="expected")
    assert torch.allclose(b.means[:, :3], a.means, atol=1e-10)
    la, lb = compute_losses(a, fut, cfg), compute_losses(b, pad_f, cfg)
    assert lb.L_Rec.item() == pytest.approx(la.L_Rec.item(), rel=1e-9)
    assert lb.L_KL.item() == pytest.approx(la.L_KL.item(), rel=1e-9)


# -- metrics ----------------------------------------------------------------
def brute_min_ade_fde(samples, gt):
    best_ade = best_fde = np.inf
    for s in samples:
        total, final = 0.0, 0.0
        n, t = gt.shape[:2]
        for i in range(n):
            for k in range(t):
                total += math.hypot(*(s[i, k] - gt[i, k]))
            final += math.hypot(*(s[i, -1] - gt[i, -1]))
        best_ade = min(best_ade, total / (n * t))
        best_fde = min(best_fde, final / n)
    return best_ade, best_fde


def test_min_ade_fde_exact_sample():
    gt = np.random.default_rng(0).normal(size=(3, 5, 2))
    samples = np.stack([gt + 1, gt, gt - 2])
    assert minade_minfde(samples, gt) == (0.0, 0.0)


def test_min_ade_fde_345():
    gt = np.zeros((2, 4, 2))
    samples = (gt + np.array([3.0, 4.0]))[None]
    ade, fde = minade_minfde(samples, gt)
    assert ade == pytest.approx(5.0) and fde == pytest.approx(5.0)


def test_min_ade_fde_brute_force(rng):
    for _ in range(100):
        k, n, t = rng.integers(1, 21), rng.integers(1, 6), rng.integers(1, 13)
        gt = rng.normal(size=(n, t, 2))
        s = gt[None] + rng.normal(size=(k, n, t, 2))
        ade, fde = minade_minfde(s, gt)
        b_ade, b_fde = brute_min_ade_fde(s, gt)
        assert abs(ade - b_ade) <= 1e-9 and abs(fde - b_fde) <= 1e-9


def test_min_ade_needs_samples():
    with pytest.raises(MetricError):
        minade_minfde(np.zeros((0, 2, 3, 2)), np.zeros((2, 3, 2)))


def test_hyperedge_labels_and_cluster_accuracy():
    inc = np.array([[1, 0, 1], [1, 0, 0], [0, 1, 0], [0, 1, 0]], float)
    pim = np.array([[0.9, 0.1, 0.95], [0.8, 0.0, 0.0], [0.0, 0.7, 0.0], [0.0, 0.6, 0.0]])
    # hyperedge 2 has a single member, so agent 0 falls back to hyperedge 0
    labels = hyperedge_labels(inc, pim)
    assert labels.tolist() == [0, 0, 1, 1]
    assert majority_cluster_accuracy(labels, [0, 0, 1, 1]) == 1.0
    assert majority_cluster_accuracy([0, 0, 0, 0], [0, 0, 1, 1]) == 0.5
    assert majority_cluster_accuracy([-1, 0, 0, 1], [0, 0, 1, 1]) == 0.5


# -- data, configs, checkpoints, training ------------------------------------
def test_window_extraction():
    ep = Episode(np.random.default_rng(0).normal(size=(3, 20, 2)), 0.25, np.array([0, 0, 1]))
    assert window_starts(20, 20) == [0]
    ws = make_windows([ep], 8, 12)
    assert len(ws) == 1
    assert np.allclose(ws.tracks[0, :, 7].mean(0), 0.0)
    assert np.allclose(ws.tracks[0] + ws.offsets[0], ep.positions)
    ws = make_windows([ep], 4, 5)
    assert len(ws) == 12
    hist, fut, mask = to_batch(ws, [0, 1], 4)
    assert hist.shape == (2, 3, 4, 2) and fut.shape == (2, 3, 5, 2) and mask.all()


def test_window_drops_absent_agents():
    present = np.ones((3, 10), bool)
    present[2, 5] = False
    ep = Episode(np.zeros((3, 10, 2)), 0.25, None, present=present)
    ws = make_windows([ep], 2, 2)
    assert ws.mask.sum(1).tolist() == [3, 3, 2, 2, 2, 2, 3]


def test_config_invariants():
    with pytest.raises(ValueError):
        PredictorConfig(T_p=6, T_f=5)
    with pytest.raises(ValueError):
        PredictorConfig(sigma2=0.0)
    with pytest.raises(ValueError):
        PredictorConfig(tau_gap=2)
    assert PredictorConfig().tau_gap == 1


def test_ablation_columns():
    assert set(ABLATIONS) >= {"scg", "shg", "scg_shg", "dcg_dhg", "dcg_dhg_sm", "dcg_dhg_sm_sh", "full",
                              "equal_attention"}
    scg = ablation_config("scg")
    assert scg.use_cg and not scg.use_hg and not scg.dynamic and scg.alpha_sm_cg == 0.0
    full = ablation_config("full")
    assert full.dynamic and full.alpha_sp_hg == 1e-3 and full.alpha_sm_cg == 1e-3
    assert ablation_config("equal_attention").equal_attention
    with pytest.raises(ValueError):
        ablation_config("nope")


def test_checkpoint_roundtrip(tmp_path):
    model = RelationalPredictor(PredictorConfig(**SMALL))
    path = save_predictor(tmp_path / "p.npz", model)
    meta, state = read_checkpoint(path, "predictor")
    assert "encoder.f_pim.layer0.weight" in state
    assert state["encoder.f_pim.layer0.weight"].dtype == torch.float32
    loaded = load_predictor(path)
    for k, v in model.state_dict().items():
        assert torch.equal(loaded.state_dict()[k], v)
    with pytest.raises(VersionError):
        read_checkpoint(path, "policy")


def test_checkpoint_version_mismatch(tmp_path, monkeypatch):
    import evolvenav.checkpoint as ck
    model = RelationalPredictor(PredictorConfig(**SMALL))
    monkeypatch.setattr(ck, "FORMAT_VERSION", 99)
    path = save_checkpoint(tmp_path / "old.npz", model, "predictor", model.cfg)
    monkeypatch.undo()
    with pytest.raises(VersionError):
        read_checkpoint(path)


def _tiny_windows():
    return make_windows(make_group_scenes(3, n_steps=9, seed=0), 4, 5, stride=5)


def test_warmup_leaves_hypergraph_parameters_untouched(tmp_path):
    cfg = PredictorConfig(**SMALL)
    model = RelationalPredictor(cfg)
    before = {id(p): p.detach().clone() for p in model.hypergraph_parameters()}
    pair_before = [p.detach().clone() for p in model.pairwise_parameters()]
    res = train_predictor(_tiny_windows(), cfg, TrainConfig(epochs=3, warmup_epochs=3, batch_size=1),
                          model=model, curves_path=tmp_path / "c.csv")
    for p in model.hypergraph_parameters():
        assert torch.equal(p, before[id(p)])
    assert any(not torch.equal(a, b) for a, b in zip(pair_before, model.pairwise_parameters()))
    header = (tmp_path / "c.csv").read_text().splitlines()[0].split(",")
    assert tuple(header) == CURVE_COLUMNS
    assert len(res.curves) == 3


def test_nonfinite_loss_aborts():
    cfg = PredictorConfig(**SMALL)
    ws = _tiny_windows()
    ws.tracks[0, 0, 0, 0] = np.nan
    with pytest.raises(TrainingError):
        train_predictor(ws, cfg, TrainConfig(epochs=1, warmup_epochs=0))


def test_loss_breakdown_floats():
    parts = LossBreakdown(*[torch.tensor(float(k)) for k in range(5)])
    assert parts.as_floats()["L_total"] == 10.0
