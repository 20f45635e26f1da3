"""Deep Q-learning around a pluggable approximator.

Replay buffer with strict FIFO eviction, a frozen target copy refreshed
every C optimizer steps, epsilon-greedy behavior with lowest-index
tie-breaking, and mean-squared Bellman regression with detached targets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import rng as rng_mod
from .classical import Adam
from .approximator import DEFAULT_RATES, QuantumApproximator
from .envs import make_env
from .errors import ConfigurationError
from .qmodel import QModelConfig


@dataclass
class Transition:
    obs: np.ndarray
    action: int
    reward: float
    next_obs: np.ndarray
    terminal: bool


class ReplayBuffer:
    """Ring buffer; uniform sampling without replacement within a batch."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ConfigurationError("capacity must be >= 1")
        self.capacity = capacity
        self.items: List[Optional[Transition]] = []
        self.cursor = 0

    def __len__(self) -> int:
        return len(self.items)

    def push(self, transition: Transition) -> None:
        if len(self.items) < self.capacity:
            self.items.append(transition)
        else:
            self.items[self.cursor] = transition
            self.cursor = (self.cursor + 1) % self.capacity

    def sample(self, batch_size: int, rng: np.random.Generator) -> List[Transition]:
        idx = rng.choice(len(self.items), size=batch_size, replace=False)
        return [self.items[i] for i in idx]


@dataclass
class DqnConfig:
    gamma: float = 0.99
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay: float = 0.99  # per-episode multiplicative decay
    batch_size: int = 32
    capacity: int = 10_000
    target_period: int = 50  # optimizer steps between target refreshes
    episodes: int = 500
    update_every: int = 1  # environment steps per optimizer step

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigurationError("gamma must be in [0, 1]")
        if self.eps_end > self.eps_start:
            raise ConfigurationError("eps_end must be <= eps_start")


def select_action(
    q_values: np.ndarray, epsilon: float, rng: np.random.Generator
) -> int:
    """Epsilon-greedy; greedy ties break toward the lowest index."""
    q_values = np.asarray(q_values)
    if q_values.size == 0:
        raise ConfigurationError("empty action-value vector")
    if rng.random() < epsilon:
        return int(rng.integers(q_values.size))
    return int(np.argmax(q_values))


def bellman_target(
    transition: Transition, target_net, gamma: float
) -> float:
    """r for terminal transitions, else r + gamma * max_a' Q_target(s', a')."""
    if transition.terminal:
        return float(transition.reward)
    return float(
        transition.reward + gamma * np.max(target_net.q_values(transition.next_obs))
    )


def bellman_targets_batch(
    batch: List[Transition], target_net, gamma: float
) -> np.ndarray:
    targets = np.array([t.reward for t in batch], dtype=np.float64)
    live = [i for i, t in enumerate(batch) if not t.terminal]
    if live:
        nxt = np.stack([batch[i].next_obs for i in live])
        targets[live] += gamma * np.max(target_net.q_values_batch(nxt), axis=1)
    return targets


def dqn_update(
    batch: List[Transition], net, target_net, optimizer: Adam, gamma: float
) -> float:
    """One regression step toward detached Bellman targets; returns loss."""
    if not batch:
        raise ConfigurationError("empty batch")
    targets = bellman_targets_batch(batch, target_net, gamma)
    obs = np.stack([t.obs for t in batch])
    actions = np.array([t.action for t in batch])
    return net.train_step(obs, actions, targets, optimizer)


@dataclass
class EpisodeRow:
    episode: int
    reward: float
    epsilon: float
    mean_loss: float


def run_dqn(
    config: DqnConfig,
    env_kind: str,
    model_config: QModelConfig,
    seed: int,
    net=None,
    env=None,
    on_episode=None,
) -> List[EpisodeRow]:
    """Seeded training run; returns one row per episode.

    ``net``/``env`` may be injected (e.g. a tabular approximator on a toy
    MDP); by default a quantum approximator on the named environment.
    ``on_episode`` may return a truthy value to stop training early.
    """
    env = env if env is not None else make_env(env_kind, seed=seed)
    if net is None:
        net = QuantumApproximator.create(
            model_config, env_kind, env.obs_dim, rng_mod.stream(seed, "init")
        )
    target = net.clone()
    optimizer = Adam(lr=DEFAULT_RATES)
    env_rng = rng_mod.stream(seed, "env")
    eps_rng = rng_mod.stream(seed, "epsilon")
    sample_rng = rng_mod.stream(seed, "replay")
    buffer = ReplayBuffer(config.capacity)
    rows: List[EpisodeRow] = []
    epsilon = config.eps_start
    updates = 0
    for episode in range(config.episodes):
        obs = env.reset(env_rng)
        total = 0.0
        losses: List[float] = []
        done = False
        step = 0
        while not done:
            action = select_action(net.q_values(obs), epsilon, eps_rng)
            next_obs, reward, done = env.step(action)
            buffer.push(Transition(obs, action, reward, next_obs, done))
            obs = next_obs
            total += reward
            step += 1
            if (
                len(buffer) >= config.batch_size
                and step % config.update_every == 0
            ):
                batch = buffer.sample(config.batch_size, sample_rng)
                losses.append(
                    dqn_update(batch, net, target, optimizer, config.gamma)
                )
                updates += 1
                if updates % config.target_period == 0:
                    target = net.clone()
        row = EpisodeRow(
            episode, total, epsilon, float(np.mean(losses)) if losses else 0.0
        )
        epsilon = max(config.eps_end, epsilon * config.eps_decay)
        rows.append(row)
        if on_episode is not None and on_episode(row):
            break
    return rows


def count_successes(env_kind: str, rows: List[EpisodeRow]) -> int:
    """Goal-reach count; for MountainCar an episode succeeds iff it ends
    before the step cap (reward > -200)."""
    if env_kind == "mountaincar":
        return sum(1 for r in rows if r.reward > -200)
    return sum(1 for r in rows if r.reward > 0)
