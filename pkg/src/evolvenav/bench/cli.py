"""Command-line entry point: simulate, train/evaluate the predictor and the navigation policy, plot."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np
import torch

from ..checkpoint import load_predictor, save_policy, save_predictor
from ..config import ConfigError, build, load_config_file, section
from ..crowd_sim.dataset import generate_dataset
from ..crowd_sim.episode_io import read_episode
from ..crowd_sim.types import ScenarioConfig
from ..navigation.env import NavEnv
from ..navigation.reward import RewardConfig
from ..navigation.trace import read_trace
from ..policy.network import NavPolicy, PolicyConfig
from ..policy.ppo import PpoConfig, train_ppo
from ..prediction.data import make_windows
from ..prediction.model import ABLATIONS, PredictorConfig, ablation_config
from ..prediction.training import TrainConfig, evaluate, train_predictor, write_curves
from .ethucy import DATA_ENV, load_ethucy_dir
from .suite import METHODS, SuiteConfig, make_predictor, run_eval_suite

log = logging.getLogger("evolvenav")


def _config(args) -> dict:
    return load_config_file(args.config) if args.config else {}


def _data_root(args) -> Path:
    root = args.data or os.environ.get(DATA_ENV)
    if not root:
        raise SystemExit(f"no dataset: pass --data or set {DATA_ENV}")
    return Path(root)


def load_split(root: Path, split: str, T_h: int, T_f: int, dt: float | None = None):
    """Windows from simulator episode files under ``root/split``; falls back to raw ``frame id x y`` text."""
    split_dir = root / split
    files = sorted(split_dir.glob("*.txt")) if split_dir.is_dir() else []
    if files:
        episodes = [read_episode(f) for f in files]
    else:
        bundle = load_ethucy_dir(split_dir if split_dir.is_dir() else root, dt=dt or 0.4)
        episodes = bundle.episodes
    return make_windows(episodes, T_h, T_f)


def cmd_simulate(args) -> int:
    values = _config(args)
    sc = build(ScenarioConfig, section(values, "scenario"))
    out = Path(args.out or "data")
    written = generate_dataset(sc, (args.n_train, args.n_val, args.n_test), out, seed=args.seed)
    print(json.dumps({k: len(v) for k, v in written.items()}))
    return 0


def cmd_train_pred(args) -> int:
    values = _config(args)
    base = build(PredictorConfig, section(values, "predictor"))
    cfg = ablation_config(args.ablation, base)
    tcfg = build(TrainConfig, section(values, "train"), seed=args.seed,
                 **({"epochs": args.epochs} if args.epochs is not None else {}))
    root = _data_root(args)
    train = load_split(root, "train", cfg.T_h, cfg.T_f)
    val = load_split(root, "val", cfg.T_h, cfg.T_f)
    out = Path(args.out or "runs/pred")
    out.mkdir(parents=True, exist_ok=True)
    res = train_predictor(train, cfg, tcfg, val, curves_path=out / "curves.csv")
    save_predictor(out / "predictor.npz", res.model)
    print(json.dumps({"best_epoch": res.best_epoch, "best_val_minADE": res.best_val if np.isfinite(res.best_val) else None,
                      "checkpoint": str(out / "predictor.npz")}))
    return 0


def cmd_eval_pred(args) -> int:
    model = load_predictor(args.ckpt)
    root = _data_root(args)
    ws = load_split(root, "test", model.cfg.T_h, model.cfg.T_f)
    gen = torch.Generator().manual_seed(args.seed)
    ade, fde = evaluate(model, ws, k=args.k, generator=gen)
    out = Path(args.out or "reports")
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "pred_metrics.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["checkpoint", "k", "windows", "minADE", "minFDE"])
        w.writerow([args.ckpt, args.k, len(ws), repr(ade), repr(fde)])
    print(f"minADE_{args.k} {ade:.4f}  minFDE_{args.k} {fde:.4f}  ({len(ws)} windows)")
    return 0


def _nav_configs(values: dict):
    sc = build(ScenarioConfig, section(values, "scenario"))
    rc = build(RewardConfig, section(values, "reward"))
    pc = build(PolicyConfig, section(values, "policy"))
    return sc, rc, pc


def cmd_train_nav(args) -> int:
    values = _config(args)
    sc, rc, pc = _nav_configs(values)
    ppo = build(PpoConfig, section(values, "ppo"), seed=args.seed)
    model = load_predictor(args.pred_ckpt) if args.pred_ckpt else None
    method = args.baseline or ("ours" if model is not None else "rl_cv")
    envs = [NavEnv(sc, rc, make_predictor(method, sc.dt, pc.horizon, model), horizon=pc.horizon)
            for _ in range(ppo.n_envs)]
    torch.manual_seed(args.seed)
    policy = NavPolicy(pc)
    res = train_ppo(envs, policy, ppo, total_steps=args.steps)
    out = Path(args.out or "runs/nav")
    out.mkdir(parents=True, exist_ok=True)
    save_policy(out / f"policy_{method}.npz", policy)
    with open(out / f"ppo_{method}.csv", "w", newline="") as fh:
        keys = sorted({k for row in res.history for k in row})
        w = csv.DictWriter(fh, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        w.writerows(res.history)
    print(json.dumps({"steps": res.steps, "checkpoint": str(out / f"policy_{method}.npz")}))
    return 0


def cmd_eval_nav(args) -> int:
    values = _config(args)
    sc, rc, pc = _nav_configs(values)
    cfg = SuiteConfig(episodes=args.episodes, seed=args.seed, methods=tuple(args.baseline),
                      scenario=sc, reward=rc, horizon=pc.horizon, write_traces=args.traces)
    records = run_eval_suite(args.pred_ckpt, args.ckpt, cfg, args.out or "reports", plots=not args.no_plots)
    for method, rec in records.items():
        print(f"{method}: {rec.format()}")
    return 0


def cmd_plot(args) -> int:
    from .plotting import plot_curves, plot_trace
    out = Path(args.out or "plot.png")
    if args.trace:
        plot_trace(read_trace(args.trace), out)
    elif args.curves:
        plot_curves(args.curves, out)
    else:
        raise SystemExit("plot needs --trace or --curves")
    print(out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--out", help="output directory (or file for plot)")
    common.add_argument("-v", "--verbose", action="store_true")
    p = argparse.ArgumentParser(prog="evolvenav", parents=[common],
                                description="Relational crowd prediction and socially aware navigation.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="generate ORCA crowd episodes")
    s.add_argument("--n-train", type=int, default=5000)
    s.add_argument("--n-val", type=int, default=2000)
    s.add_argument("--n-test", type=int, default=2000)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("train-pred", parents=[common], help="train the trajectory predictor")
    s.add_argument("--ablation", default="full", choices=sorted(ABLATIONS))
    s.add_argument("--data", help=f"dataset root (default ${DATA_ENV})")
    s.add_argument("--epochs", type=int)
    s.set_defaults(func=cmd_train_pred)

    s = sub.add_parser("eval-pred", parents=[common], help="minADE/minFDE of a predictor checkpoint")
    s.add_argument("--ckpt", required=True)
    s.add_argument("--data")
    s.add_argument("--k", type=int, default=20)
    s.set_defaults(func=cmd_eval_pred)

    s = sub.add_parser("train-nav", parents=[common], help="train the navigation policy with PPO")
    s.add_argument("--pred-ckpt")
    s.add_argument("--steps", type=int, default=None)
    s.add_argument("--baseline", choices=("rl_nopred", "rl_cv", "ours"))
    s.set_defaults(func=cmd_train_nav)

    s = sub.add_parser("eval-nav", parents=[common], help="evaluate navigation methods")
    s.add_argument("--ckpt", help="policy checkpoint for the RL methods")
    s.add_argument("--pred-ckpt")
    s.add_argument("--episodes", type=int, default=500)
    s.add_argument("--baseline", nargs="+", default=["ours"], choices=METHODS)
    s.add_argument("--traces", action="store_true", help="also write per-episode trace files")
    s.add_argument("--no-plots", action="store_true")
    s.set_defaults(func=cmd_eval_nav)

    s = sub.add_parser("plot", parents=[common], help="render a trace or training curves")
    s.add_argument("--trace")
    s.add_argument("--curves")
    s.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    np.random.seed(args.seed)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
