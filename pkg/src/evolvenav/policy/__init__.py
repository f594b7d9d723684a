"""Recurrent attention actor-critic, PPO trainer and baseline controllers."""
from .baselines import GreedyGoalPolicy, NetworkPolicy, OrcaRobotPolicy
from .network import (NavPolicy, Observation, PolicyConfig, batch_observations, cat_observations,
                      entity_features, gaussian_log_prob, hho_mask, index_observation, robot_features)
from .ppo import (PpoConfig, PpoResult, RolloutBuffer, RolloutCollector, clipped_surrogate, compute_gae,
                  eval_episode_seed, ppo_loss, ppo_update, train_episode_seed, train_ppo)

__all__ = [
    "GreedyGoalPolicy", "NetworkPolicy", "OrcaRobotPolicy", "NavPolicy", "Observation", "PolicyConfig",
    "batch_observations", "cat_observations", "entity_features", "gaussian_log_prob", "hho_mask",
    "index_observation", "robot_features", "PpoConfig", "PpoResult", "RolloutBuffer", "RolloutCollector",
    "clipped_surrogate", "compute_gae", "eval_episode_seed", "train_episode_seed", "ppo_loss", "ppo_update", "train_ppo",
]
