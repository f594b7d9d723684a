"""Seeded evaluation of navigation methods with CSV / text / plot reports."""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path

from ..checkpoint import load_policy, load_predictor
from ..crowd_sim.types import ScenarioConfig
from ..navigation.env import NavEnv, run_episode
from ..navigation.predictors import ConstantVelocityPredictor, RelationalPredictorAdapter, StaticPredictor
from ..navigation.reward import RewardConfig
from ..navigation.trace import write_trace
from ..policy.baselines import NetworkPolicy, OrcaRobotPolicy
from ..policy.ppo import eval_episode_seed
from .nav_metrics import METRIC_NAMES, MetricsRecord, compute_nav_metrics

log = logging.getLogger(__name__)

METHODS = ("orca", "orca_blind", "rl_nopred", "rl_cv", "ours")


@dataclass
class SuiteConfig:
    episodes: int = 500
    seed: int = 0
    methods: tuple = ("orca", "rl_nopred", "rl_cv", "ours")
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)
    horizon: int = 5
    history: int = 4
    plot_episodes: int = 1
    write_traces: bool = False


def make_predictor(method: str, dt: float, horizon: int, predictor_model=None):
    if method == "rl_nopred":
        return StaticPredictor(horizon)
    if method == "ours":
        if predictor_model is None:
            raise ValueError("method 'ours' needs a predictor checkpoint")
        return RelationalPredictorAdapter(predictor_model, dt, horizon)
    return ConstantVelocityPredictor(dt, horizon)


def evaluate_method(method: str, cfg: SuiteConfig, policy=None, predictor_model=None,
                    episodes: int | None = None) -> list:
    """Run ``episodes`` seeded evaluation episodes of one method; returns traces."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    env = NavEnv(cfg.scenario, cfg.reward, make_predictor(method, cfg.scenario.dt, cfg.horizon, predictor_model),
                 history=cfg.history, horizon=cfg.horizon)
    if method in ("orca", "orca_blind"):
        controller = OrcaRobotPolicy(env, perceive_humans=method == "orca")
    else:
        if policy is None:
            raise ValueError(f"method {method!r} needs a policy checkpoint")
        controller = NetworkPolicy(policy)
    traces = []
    for k in range(cfg.episodes if episodes is None else episodes):
        if isinstance(controller, NetworkPolicy):
            controller.reset()
        traces.append(run_episode(env, controller, seed=eval_episode_seed(cfg.seed, k)))
    return traces


def metrics_csv(records: dict[str, MetricsRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", "n"] + list(METRIC_NAMES) + [f"{k}_std" for k in METRIC_NAMES])
    for method, rec in records.items():
        w.writerow([method, rec.n_episodes] + [repr(rec.mean[k]) for k in METRIC_NAMES]
                   + [repr(rec.std[k]) for k in METRIC_NAMES])
    return buf.getvalue()


def metrics_table(records: dict[str, MetricsRecord]) -> str:
    head = f"{'method':<12}" + "".join(f"{k:>14}" for k in METRIC_NAMES)
    lines = [head]
    for method, rec in records.items():
        cells = "".join(f"{rec.mean[k]:>7.3f}±{rec.std[k]:<6.3f}" for k in METRIC_NAMES)
        lines.append(f"{method:<12}{cells}")
    return "\n".join(lines) + "\n"


def run_eval_suite(pred_ckpt=None, nav_ckpts: dict | None = None, cfg: SuiteConfig | None = None,
                   out_dir: str | Path = "reports", plots: bool = True) -> dict[str, MetricsRecord]:
    """Evaluate every configured method on the same seeded scenarios.

    ``nav_ckpts`` maps RL method names to policy checkpoints; a single
    path is used for all RL methods. Writes ``nav_metrics.csv``,
    ``nav_metrics.txt`` and, if enabled, one trajectory plot per method.
    """
    cfg = cfg or SuiteConfig()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    predictor = load_predictor(pred_ckpt) if pred_ckpt is not None else None
    if nav_ckpts is not None and not isinstance(nav_ckpts, dict):
        nav_ckpts = {m: nav_ckpts for m in ("rl_nopred", "rl_cv", "ours")}
    nav_ckpts = nav_ckpts or {}
    records = {}
    for method in cfg.methods:
        policy = load_policy(nav_ckpts[method]) if method in nav_ckpts else None
        if method in ("rl_nopred", "rl_cv", "ours") and policy is None:
            log.warning("skipping %s: no policy checkpoint", method)
            continue
        traces = evaluate_method(method, cfg, policy, predictor)
        records[method] = compute_nav_metrics(traces)
        log.info("%s: %s", method, records[method].format())
        if cfg.write_traces:
            tdir = out / "traces" / method
            tdir.mkdir(parents=True, exist_ok=True)
            for k, tr in enumerate(traces):
                write_trace(tdir / f"episode_{k:04d}.txt", tr)
        if plots:
            from .plotting import plot_trace
            for k, tr in enumerate(traces[:cfg.plot_episodes]):
                plot_trace(tr, out / f"trajectory_{method}_{k}.png", title=f"{method} episode {k}")
    (out / "nav_metrics.csv").write_text(metrics_csv(records))
    (out / "nav_metrics.txt").write_text(metrics_table(records))
    return records
