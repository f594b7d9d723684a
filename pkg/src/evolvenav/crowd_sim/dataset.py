from __future__ import annotations

import logging
from dataclasses import replace
from pathlib import Path

import numpy as np

from .episode_io import Episode, write_episode
from .scenario import init_scenario
from .types import ScenarioConfig
from .world import step_world

log = logging.getLogger(__name__)

SPLITS = ("train", "val", "test")
DEFAULT_COUNTS = (5000, 2000, 2000)


def episode_seed(seed: int, split: str, index: int) -> int:
    """Per-episode seed; splits draw from disjoint seed streams."""
    ss = np.random.SeedSequence([seed, SPLITS.index(split), index])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def simulate_episode(config: ScenarioConfig, seed: int, n_steps: int | None = None) -> Episode:
    """Roll out a pedestrian-only crowd and record every agent's track."""
    cfg = replace(config, with_robot=False)
    world = init_scenario(cfg, seed)
    n_steps = cfg.max_episode_steps if n_steps is None else n_steps
    track = np.empty((world.n_pedestrians, n_steps, 2))
    for t in range(n_steps):
        track[:, t] = world.positions
        if t + 1 < n_steps:
            world = step_world(world)
    return Episode(positions=track, dt=cfg.dt, group_ids=world.group_ids.copy(),
                   obstacles=world.obstacle_array())


def generate_dataset(config: ScenarioConfig, counts: tuple[int, int, int] = DEFAULT_COUNTS,
                     out_dir: str | Path = "data", seed: int | None = None) -> dict[str, list[Path]]:
    seed = config.rng_seed if seed is None else seed
    out_dir = Path(out_dir)
    written: dict[str, list[Path]] = {}
    for split, count in zip(SPLITS, counts):
        split_dir = out_dir / split
        try:
            split_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise OSError(f"cannot create dataset directory {split_dir}: {exc}") from exc
        paths = []
        for k in range(count):
            ep = simulate_episode(config, episode_seed(seed, split, k))
            path = split_dir / f"episode_{k:05d}.txt"
            write_episode(path, ep)
            paths.append(path)
        log.info("wrote %d %s episodes to %s", count, split, split_dir)
        written[split] = paths
    return written
