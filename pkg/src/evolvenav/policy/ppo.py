"""PPO with a recurrent policy over parallel navigation environments."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
import torch

from .network import NavPolicy, Observation, batch_observations, cat_observations, gaussian_log_prob, \
    index_observation

log = logging.getLogger(__name__)


@dataclass
class PpoConfig:
    clip_eps: float = 0.2
    n_envs: int = 16
    segment: int = 30
    episodes_per_update: int = 6
    discount_gamma: float = 0.99
    gae_lambda: float = 0.95
    lr: float = 4e-5
    total_steps: int = 20_000_000
    epochs: int = 4
    minibatches: int = 4
    value_coef: float = 0.5
    entropy_coef: float = 0.01
    max_grad_norm: float = 0.5
    normalize_advantages: bool = True
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.clip_eps < 1:
            raise ValueError("clip_eps must lie in (0, 1)")
        if self.n_envs < 1 or self.segment < 1:
            raise ValueError("need n_envs >= 1 and segment >= 1")


TRAIN_STREAM = 0x7A11
EVAL_STREAM = 0xE7A1


def train_episode_seed(seed: int, env_idx: int, episode: int) -> int:
    return int(np.random.SeedSequence([seed, TRAIN_STREAM, env_idx, episode]).generate_state(1)[0])


def eval_episode_seed(seed: int, index: int) -> int:
    """Evaluation scenarios come from a seed stream disjoint from the training one."""
    return int(np.random.SeedSequence([seed, EVAL_STREAM, index]).generate_state(1)[0])


def compute_gae(rewards, values, dones, last_value, gamma: float, lam: float):
    """Generalized advantage estimates over [T, B] arrays.

    ``dones[t]`` marks that the episode ended after step t (no bootstrap
    across it). Returns (advantages, returns).
    """
    rewards = torch.as_tensor(rewards, dtype=torch.float64)
    values = torch.as_tensor(values, dtype=torch.float64)
    dones = torch.as_tensor(dones, dtype=torch.float64)
    last_value = torch.as_tensor(last_value, dtype=torch.float64)
    t_len = rewards.shape[0]
    adv = torch.zeros_like(rewards)
    gae = torch.zeros_like(last_value)
    for t in reversed(range(t_len)):
        next_v = last_value if t == t_len - 1 else values[t + 1]
        live = 1.0 - dones[t]
        delta = rewards[t] + gamma * next_v * live - values[t]
        gae = delta + gamma * lam * live * gae
        adv[t] = gae
    return adv, adv + values


def clipped_surrogate(ratio: torch.Tensor, adv: torch.Tensor, eps: float) -> torch.Tensor:
    return torch.minimum(ratio * adv, torch.clamp(ratio, 1 - eps, 1 + eps) * adv).mean()


@dataclass
class RolloutBuffer:
    obs: list                 # T Observations, each batched over envs
    actions: torch.Tensor     # [T, B, 2] raw sampled actions
    log_probs: torch.Tensor   # [T, B]
    rewards: torch.Tensor     # [T, B]
    values: torch.Tensor      # [T, B]
    dones: torch.Tensor       # [T, B] episode ended after step t
    resets: torch.Tensor      # [T, B] hidden state zeroed before step t
    hidden0: torch.Tensor     # [1, B, H] at segment start
    last_value: torch.Tensor  # [B]
    advantages: torch.Tensor | None = None
    returns: torch.Tensor | None = None
    episodes: list = field(default_factory=list)  # finished (env, event, length)

    @property
    def n_steps(self) -> int:
        return self.actions.shape[0] * self.actions.shape[1]

    def compute_advantages(self, gamma: float, lam: float) -> None:
        adv, ret = compute_gae(self.rewards, self.values, self.dones, self.last_value, gamma, lam)
        self.advantages, self.returns = adv.float(), ret.float()

    def evaluate(self, policy: NavPolicy, envs=None):
        """Recompute (log-prob, entropy, value) for the stored actions; envs selects columns."""
        idx = slice(None) if envs is None else envs
        obs = cat_observations([index_observation(o, idx) for o in self.obs])
        t_len = len(self.obs)
        x = policy.encode(obs).view(t_len, -1, 2 * policy.cfg.embed)
        mean, std, value, _ = policy.policy_value_forward(x, self.hidden0[:, idx], self.resets[:, idx])
        logp = gaussian_log_prob(self.actions[:, idx], mean, std)
        entropy = torch.distributions.Normal(mean, std).entropy().sum(-1)
        return logp, entropy, value


class RolloutCollector:
    """Keeps env states and recurrent hidden states across collection rounds."""

    def __init__(self, envs, policy: NavPolicy, cfg: PpoConfig, seed_fn=None):
        self.envs = envs
        self.policy = policy
        self.cfg = cfg
        self.seed_fn = seed_fn or (lambda env_idx, episode: train_episode_seed(cfg.seed, env_idx, episode))
        self.episode_counts = [0] * len(envs)
        self.rng = torch.Generator().manual_seed(cfg.seed)
        self.states = [self._reset(k) for k in range(len(envs))]
        self.hidden = policy.initial_hidden(len(envs))
        self.fresh = torch.ones(len(envs), dtype=torch.bool)
        self.steps = [0] * len(envs)

    def _reset(self, k: int):
        seed = self.seed_fn(k, self.episode_counts[k])
        self.episode_counts[k] += 1
        return self.envs[k].reset(seed)

    @torch.no_grad()
    def collect(self) -> RolloutBuffer:
        cfg, policy = self.cfg, self.policy
        n = len(self.envs)
        horizon = policy.cfg.horizon
        hidden0 = self.hidden.clone()
        obs_list, acts, logps, rews, vals, dones, resets = [], [], [], [], [], [], []
        episodes = []
        for _ in range(cfg.segment):
            obs = batch_observations(self.states, horizon)
            reset_now = self.fresh.clone()
            h = self.hidden * (1.0 - reset_now.float()).view(1, -1, 1)
            mean, std, value, h = policy.step(obs, h)
            action = mean + std * torch.randn(mean.shape, generator=self.rng)
            logp = gaussian_log_prob(action, mean, std)
            reward = torch.zeros(n)
            done = torch.zeros(n, dtype=torch.bool)
            for k, env in enumerate(self.envs):
                try:
                    state, r, d, info = env.step(action[k].numpy().astype(float))
                except Exception as exc:  # noqa: BLE001 - isolate a faulty env
                    log.warning("env %d failed (%s); resetting it", k, exc)
                    state, r, d, info = None, 0.0, True, {"event": "fault"}
                reward[k] = r
                done[k] = d
                self.steps[k] += 1
                if d:
                    episodes.append((k, info.get("event"), self.steps[k]))
                    self.steps[k] = 0
                    state = self._reset(k)
                self.states[k] = state
            obs_list.append(obs)
            acts.append(action)
            logps.append(logp)
            rews.append(reward)
            vals.append(value)
            dones.append(done)
            resets.append(reset_now)
            self.hidden = h
            self.fresh = done.clone()
        obs = batch_observations(self.states, horizon)
        h = self.hidden * (1.0 - self.fresh.float()).view(1, -1, 1)
        _, _, last_value, _ = policy.step(obs, h)
        return RolloutBuffer(obs_list, torch.stack(acts), torch.stack(logps), torch.stack(rews),
                             torch.stack(vals), torch.stack(dones), torch.stack(resets), hidden0,
                             last_value, episodes=episodes)


def ppo_loss(policy: NavPolicy, buf: RolloutBuffer, cfg: PpoConfig, envs=None, adv=None):
    idx = slice(None) if envs is None else envs
    logp, entropy, value = buf.evaluate(policy, envs)
    adv = buf.advantages[:, idx] if adv is None else adv[:, idx]
    ratio = torch.exp(logp - buf.log_probs[:, idx])
    surrogate = clipped_surrogate(ratio, adv, cfg.clip_eps)
    v_loss = ((value - buf.returns[:, idx]) ** 2).mean()
    ent = entropy.mean()
    loss = -surrogate + cfg.value_coef * v_loss - cfg.entropy_coef * ent
    stats = {"surrogate": surrogate, "value_loss": v_loss, "entropy": ent, "ratio_mean": ratio.mean()}
    return loss, {k: float(v.detach()) for k, v in stats.items()}


def ppo_update(policy: NavPolicy, optimizer: torch.optim.Optimizer, buf: RolloutBuffer,
               cfg: PpoConfig, rng: np.random.Generator | None = None) -> dict:
    if buf.advantages is None:
        buf.compute_advantages(cfg.discount_gamma, cfg.gae_lambda)
    adv = buf.advantages
    if cfg.normalize_advantages and adv.numel() > 1:
        adv = (adv - adv.mean()) / (adv.std() + 1e-8)
    rng = rng or np.random.default_rng(cfg.seed)
    n_envs = buf.actions.shape[1]
    n_mb = max(1, min(cfg.minibatches, n_envs))
    stats, skipped = {}, 0
    for _ in range(cfg.epochs):
        for mb in np.array_split(rng.permutation(n_envs), n_mb):
            envs = torch.as_tensor(mb)
            loss, stats = ppo_loss(policy, buf, cfg, envs, adv)
            optimizer.zero_grad(set_to_none=True)
            loss.backward()
            grads = [p.grad for p in policy.parameters() if p.grad is not None]
            if not all(torch.isfinite(g).all() for g in grads):
                skipped += 1
                log.warning("non-finite gradient; update skipped")
                continue
            torch.nn.utils.clip_grad_norm_(policy.parameters(), cfg.max_grad_norm)
            optimizer.step()
    stats["skipped"] = skipped
    return stats


@dataclass
class PpoResult:
    policy: NavPolicy
    history: list = field(default_factory=list)
    steps: int = 0


def train_ppo(envs, policy: NavPolicy, cfg: PpoConfig, total_steps: int | None = None,
              time_limit: float | None = None, callback=None) -> PpoResult:
    torch.manual_seed(cfg.seed)
    total = cfg.total_steps if total_steps is None else total_steps
    opt = torch.optim.Adam(policy.parameters(), lr=cfg.lr)
    collector = RolloutCollector(envs, policy, cfg)
    rng = np.random.default_rng(cfg.seed)
    result = PpoResult(policy)
    t0 = time.monotonic()
    while result.steps < total:
        buf = collector.collect()
        buf.compute_advantages(cfg.discount_gamma, cfg.gae_lambda)
        stats = ppo_update(policy, opt, buf, cfg, rng)
        result.steps += buf.n_steps
        events = [e for _, e, _ in buf.episodes]
        stats.update(steps=result.steps, episodes=len(events),
                     success=events.count("success"), reward=float(buf.rewards.sum()) / len(envs))
        result.history.append(stats)
        if callback is not None and callback(result, stats):
            break
        if time_limit is not None and time.monotonic() - t0 > time_limit:
            log.warning("PPO time limit reached after %d steps", result.steps)
            break
    return result
