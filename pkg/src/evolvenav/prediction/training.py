"""Two-stage predictor training: pairwise warm-up, then the full model."""
from __future__ import annotations

import copy
import csv
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .data import WindowSet, iterate_batches, to_batch
from .losses import compute_losses
from .metrics import minade_minfde
from .model import PredictorConfig, RelationalPredictor

log = logging.getLogger(__name__)

CURVE_COLUMNS = ("epoch", "L_Rec", "L_KL", "L_SM", "L_SH", "L_SP", "val_minADE", "val_minFDE")


class TrainingError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    epochs: int = 10000
    warmup_epochs: int = 50
    batch_size: int = 32
    lr: float = 1e-3
    lr_decay: float = 0.85
    lr_step: int = 100      # epochs between decays
    patience: int = 50      # evaluations without val improvement
    eval_every: int = 1
    k_samples: int = 20
    seed: int = 0
    incidence_mode: str = "hard"
    relation_mode: str = "stochastic"
    teacher_forcing: bool = True
    grad_clip: float | None = 10.0
    target_rec: float | None = None  # stop once the epoch's mean L_Rec drops below this
    time_limit: float | None = None  # seconds


@dataclass
class TrainResult:
    model: RelationalPredictor
    curves: list = field(default_factory=list)
    best_epoch: int = -1
    best_val: float = float("inf")


def evaluate(model: RelationalPredictor, ws: WindowSet, k: int = 20, batch_size: int = 64,
             generator: torch.Generator | None = None, relation_mode: str = "stochastic") -> tuple[float, float]:
    """Dataset-mean minADE_k / minFDE_k with fed-back predictions."""
    cfg = model.cfg
    was_training = model.training
    model.eval()
    ade_sum = fde_sum = 0.0
    for idx in iterate_batches(len(ws), batch_size):
        hist, fut, mask = to_batch(ws, idx, cfg.T_h, dtype=next(model.parameters()).dtype)
        samples = model.sample(hist, mask, n_samples=k, relation_mode=relation_mode,
                               generator=generator, horizon=fut.shape[-2])
        ade, fde = minade_minfde(samples.numpy(), fut.numpy(), mask.numpy())
        ade_sum += ade * len(idx)
        fde_sum += fde * len(idx)
    model.train(was_training)
    return ade_sum / len(ws), fde_sum / len(ws)


def _check_finite(loss, parts: dict, epoch: int, stage: str) -> None:
    if not torch.isfinite(loss):
        raise TrainingError(f"non-finite loss in {stage} at epoch {epoch}: {parts}")


def train_predictor(train: WindowSet, cfg: PredictorConfig, tcfg: TrainConfig | None = None,
                    val: WindowSet | None = None, model: RelationalPredictor | None = None,
                    curves_path: str | Path | None = None, callback=None) -> TrainResult:
    """Train with Adam + StepLR; ``callback(epoch, model, row)`` returning True stops early."""
    tcfg = tcfg or TrainConfig()
    torch.manual_seed(tcfg.seed)
    rng = np.random.default_rng(tcfg.seed)
    gen = torch.Generator().manual_seed(tcfg.seed)
    model = model or RelationalPredictor(cfg)
    dtype = next(model.parameters()).dtype
    result = TrainResult(model)
    stale = 0
    best_state = None
    t0 = time.monotonic()

    # Hypergraph modules are absent from the warm-up forward pass, so their
    # gradients stay None and Adam leaves them untouched until stage 2.
    warm = min(tcfg.warmup_epochs, tcfg.epochs) if cfg.use_cg and cfg.use_hg else 0
    opt = torch.optim.Adam(model.parameters(), lr=tcfg.lr)
    sched = torch.optim.lr_scheduler.StepLR(opt, step_size=tcfg.lr_step, gamma=tcfg.lr_decay)
    model.train()
    for epoch in range(tcfg.epochs):
        warmup = epoch < warm
        stage = "warm-up" if warmup else "joint"
        totals = dict.fromkeys(CURVE_COLUMNS[1:6], 0.0)
        n_seen = 0
        for idx in iterate_batches(len(train), tcfg.batch_size, rng):
            hist, fut, mask = to_batch(train, idx, cfg.T_h, dtype=dtype)
            out = model.rollout(hist, mask, future=fut if tcfg.teacher_forcing else None,
                                incidence_mode=tcfg.incidence_mode, relation_mode=tcfg.relation_mode,
                                generator=gen,
                                use_hg=not warmup)
            parts = compute_losses(out, fut, cfg)
            loss = parts.L_total
            _check_finite(loss, parts.as_floats(), epoch, stage)
            opt.zero_grad(set_to_none=True)
            loss.backward()
            if tcfg.grad_clip is not None:
                torch.nn.utils.clip_grad_norm_(model.parameters(), tcfg.grad_clip)
            opt.step()
            f = parts.as_floats()
            for key in totals:
                totals[key] += f[key] * len(idx)
            n_seen += len(idx)
        sched.step()
        row = {"epoch": epoch, **{k: v / n_seen for k, v in totals.items()},
               "val_minADE": float("nan"), "val_minFDE": float("nan")}
        if val is not None and not warmup and (epoch + 1) % tcfg.eval_every == 0:
            ade, fde = evaluate(model, val, tcfg.k_samples,
                                generator=torch.Generator().manual_seed(tcfg.seed + 1))
            row["val_minADE"], row["val_minFDE"] = ade, fde
            if ade < result.best_val:
                result.best_val, result.best_epoch = ade, epoch
                best_state = copy.deepcopy(model.state_dict())
                stale = 0
            else:
                stale += 1
        result.curves.append(row)
        log.debug("epoch %d %s %s", epoch, stage, row)
        if stale >= tcfg.patience:
            log.info("early stop at epoch %d (best %d)", epoch, result.best_epoch)
            break
        if callback is not None and callback(epoch, model, row):
            break
        if tcfg.target_rec is not None and not warmup and row["L_Rec"] < tcfg.target_rec:
            break
        if tcfg.time_limit is not None and time.monotonic() - t0 > tcfg.time_limit:
            log.warning("time limit reached at epoch %d", epoch)
            break
    if best_state is not None:
        model.load_state_dict(best_state)
    if curves_path is not None:
        write_curves(curves_path, result.curves)
    return result


def write_curves(path: str | Path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CURVE_COLUMNS, extrasaction="ignore")
        w.writeheader()
        w.writerows(rows)
