"""Social-navigation MDP on top of the crowd simulator."""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from ..crowd_sim.scenario import init_scenario
from ..crowd_sim.types import RobotState, ScenarioConfig, SimWorld
from ..crowd_sim.world import clamp_speed, step_world
from .predictors import ConstantVelocityPredictor
from .reward import RewardConfig, StepEvents, group_hulls, total_reward
from .trace import EpisodeTrace

log = logging.getLogger(__name__)


@dataclass
class MdpState:
    robot: RobotState
    human_positions: np.ndarray   # [N_vis, 2]
    human_velocities: np.ndarray  # [N_vis, 2]
    human_radii: np.ndarray       # [N_vis]
    human_ids: np.ndarray         # [N_vis] indices into the world's pedestrians
    group_ids: np.ndarray         # [N_vis]
    predictions: np.ndarray       # [N_vis, T_f, 2]
    obstacles: np.ndarray         # [O, 3]
    time_step: int = 0

    @property
    def n_visible(self) -> int:
        return len(self.human_ids)


def visible_humans(world: SimWorld) -> np.ndarray:
    r = world.robot
    d = np.linalg.norm(world.positions - r.position[None], axis=1)
    return np.flatnonzero(d <= r.sensor_range)


def classify_events(world: SimWorld) -> StepEvents:
    r = world.robot
    d_h = np.linalg.norm(world.positions - r.position[None], axis=1)
    obst = world.obstacle_array()
    d_o = np.linalg.norm(obst[:, :2] - r.position[None], axis=1) if len(obst) else np.zeros(0)
    return StepEvents(
        goal=bool(np.linalg.norm(r.position - r.goal) <= r.radius),
        human_collision=bool(np.any(d_h < r.radius + world.radii)),
        obstacle_collision=bool(np.any(d_o < r.radius + obst[:, 2])) if len(obst) else False,
    )


class NavEnv:
    """One robot among ORCA pedestrians.

    ``predictor`` maps visible humans' histories to future positions; any
    failure falls back to constant-velocity extrapolation with a warning.
    """

    def __init__(self, scenario: ScenarioConfig | None = None, reward: RewardConfig | None = None,
                 predictor=None, history: int = 4, horizon: int = 5):
        self.scenario = replace(scenario or ScenarioConfig(), with_robot=True)
        self.reward_cfg = reward or RewardConfig()
        self.history = history
        self.horizon = horizon
        self.cv = ConstantVelocityPredictor(self.scenario.dt, horizon)
        self.predictor = predictor or self.cv
        self.world: SimWorld | None = None
        self.trace: EpisodeTrace | None = None
        self.done = True
        self.fallbacks = 0

    # -- lifecycle -----------------------------------------------------------
    def reset(self, seed: int | None = None) -> MdpState:
        return self.reset_from_world(init_scenario(self.scenario, seed))

    def reset_from_world(self, world: SimWorld) -> MdpState:
        if world.robot is None:
            raise ValueError("navigation needs a world with a robot")
        self.world = world
        self._hist = deque([world.positions.copy()] * self.history, maxlen=self.history)
        self.done = False
        self.trace = EpisodeTrace(world.config.dt, world.robot.radius, world.robot.goal.copy(),
                                  human_radii=world.radii.copy(), group_ids=world.group_ids.copy(),
                                  obstacles=world.obstacle_array())
        self.trace.robot_positions.append(world.robot.position.copy())
        self.trace.human_positions.append(world.positions.copy())
        self.state = self._observe()
        return self.state

    def _predict(self, histories: np.ndarray) -> tuple[np.ndarray, bool]:
        if len(histories) == 0:
            return np.zeros((0, self.horizon, 2)), False
        try:
            pred = np.asarray(self.predictor.predict(histories), float)
            if pred.shape != (len(histories), self.horizon, 2) or not np.isfinite(pred).all():
                raise ValueError(f"bad prediction of shape {pred.shape}")
            return pred, False
        except Exception as exc:  # noqa: BLE001 - any predictor fault degrades to CV
            self.fallbacks += 1
            log.warning("predictor failed (%s); using constant-velocity extrapolation", exc)
            return self.cv.predict(histories), True

    def _observe(self) -> MdpState:
        w = self.world
        ids = visible_humans(w)
        hist = np.stack(list(self._hist), axis=1)[ids]  # [N_vis, T_h, 2]
        pred, self._fell_back = self._predict(hist)
        return MdpState(w.robot.copy(), w.positions[ids].copy(), w.velocities[ids].copy(),
                        w.radii[ids].copy(), ids, w.group_ids[ids].copy(), pred,
                        w.obstacle_array(), w.time_step)

    def _hulls(self, state: MdpState):
        groups = state.group_ids
        if self.reward_cfg.hull_source == "inferred":
            inferred = getattr(self.predictor, "last_groups", None)
            if inferred is not None and len(inferred) == state.n_visible:
                groups = inferred
        return group_hulls(state.human_positions, groups)

    def step(self, action) -> tuple[MdpState, float, bool, dict]:
        if self.done:
            raise RuntimeError("episode finished; call reset()")
        action = clamp_speed(np.asarray(action, float).reshape(2), self.world.robot.v_max)
        prev_goal = float(np.linalg.norm(self.world.robot.position - self.world.robot.goal))
        self.world = step_world(self.world, action)
        self._hist.append(self.world.positions.copy())
        state = self._observe()
        events = classify_events(self.world)
        rc = self.reward_cfg
        reward, branch = total_reward(
            events, rc, robot_pos=state.robot.position, robot_radius=state.robot.radius,
            goal=state.robot.goal, predicted=state.predictions, human_radii=state.human_radii,
            obstacles=state.obstacles, hulls=self._hulls(state), prev_goal_distance=prev_goal)
        event = branch if branch != "ordinary" else None
        if event is None and self.world.time_step >= rc.timeout_steps:
            event = "timeout"
        self.done = event is not None
        self.trace.robot_positions.append(self.world.robot.position.copy())
        self.trace.human_positions.append(self.world.positions.copy())
        self.trace.rewards.append(reward)
        self.trace.events.append(event or "ordinary")
        self.state = state
        info = {"event": event, "branch": branch, "fallback": self._fell_back,
                "time_step": self.world.time_step}
        return state, reward, self.done, info


def run_episode(env: NavEnv, policy_fn, seed: int | None = None, max_steps: int | None = None) -> EpisodeTrace:
    """Roll out ``policy_fn(state) -> action`` until the episode ends."""
    state = env.reset(seed)
    limit = max_steps or env.reward_cfg.timeout_steps
    for _ in range(limit):
        state, _, done, _ = env.step(policy_fn(state))
        if done:
            break
    return env.trace
