"""Asynchronous advantage actor-critic with quantum actor and critic.

Workers collect n-step fragments with a Gibbs (softmax) policy, compute
gradients on a private parameter snapshot, and submit them to a shared
store. The store applies updates under a short exclusive section around
the optimizer step and hands out complete (non-torn) snapshots; every
applied update bumps a version counter and, when auditing is on, records
a parameter checksum so readers can verify snapshot integrity.
"""

from __future__ import annotations

import hashlib
import queue
import threading
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import rng as rng_mod
from .approximator import DEFAULT_RATES, QuantumApproximator
from .classical import Adam, ParamStore, copy_params
from .envs import make_env
from .errors import ConfigurationError, NumericError
from .qmodel import QModelConfig


@dataclass
class A3cConfig:
    workers: int = 4
    n_step: int = 5
    gamma: float = 0.99
    value_weight: float = 0.5  # c_v
    entropy_weight: float = 0.01  # beta
    episodes: int = 1000  # global episode budget across workers
    grad_clip: float = 5.0
    audit: bool = False

    def __post_init__(self):
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        if self.value_weight <= 0:
            raise ConfigurationError("value weight must be > 0")
        if self.entropy_weight < 0:
            raise ConfigurationError("entropy weight must be >= 0")


def policy(logits: np.ndarray) -> np.ndarray:
    """Softmax with max-subtraction; rows sum to 1."""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    expd = np.exp(shifted)
    return expd / np.sum(expd, axis=-1, keepdims=True)


@dataclass
class RolloutFragment:
    obs: List[np.ndarray]
    actions: List[int]
    rewards: List[float]
    terminal: bool  # fragment ended the episode
    bootstrap_obs: Optional[np.ndarray]  # s_{t+n} when non-terminal

    def __len__(self) -> int:
        return len(self.rewards)


def n_step_returns(
    rewards: np.ndarray, bootstrap_value: float, values: np.ndarray, gamma: float
) -> Tuple[np.ndarray, np.ndarray]:
    """Discounted returns from the fragment tail and their advantages."""
    rewards = np.asarray(rewards, dtype=np.float64)
    returns = np.zeros_like(rewards)
    acc = float(bootstrap_value)
    for t in range(len(rewards) - 1, -1, -1):
        acc = rewards[t] + gamma * acc
        returns[t] = acc
    return returns, returns - np.asarray(values, dtype=np.float64)


def a3c_loss(
    fragment: RolloutFragment,
    actor: QuantumApproximator,
    critic: QuantumApproximator,
    config: A3cConfig,
) -> Tuple[float, ParamStore, ParamStore]:
    """Composite fragment loss and gradients for actor and critic.

    Per step: -log pi(a_t|s_t) * A_t  +  c_v * (G_t - V(s_t))^2 / 2
    - beta * sum_a pi log pi  (the printed form; equals +beta*entropy).
    Advantages are constants in the policy term; the entropy term is
    differentiated through pi and the value term through V.
    """
    obs = np.stack(fragment.obs)
    actions = np.asarray(fragment.actions, dtype=np.int64)
    steps = len(fragment)
    logits = actor.q_values_batch(obs)
    probs = policy(logits)
    values = critic.q_values_batch(obs)[:, 0]
    bootstrap = (
        0.0
        if fragment.terminal
        else float(critic.q_values(fragment.bootstrap_obs)[0])
    )
    returns, advantages = n_step_returns(
        fragment.rewards, bootstrap, values, config.gamma
    )

    log_probs = np.log(probs)
    entropy = -np.sum(probs * log_probs, axis=1)
    pick = log_probs[np.arange(steps), actions]
    loss = float(
        np.sum(
            -pick * advantages
            + config.value_weight * 0.5 * (returns - values) ** 2
            + config.entropy_weight * entropy
        )
    )
    if not np.isfinite(loss):
        raise NumericError("non-finite A3C loss")

    # d(loss)/d(actor logits): policy term + entropy term
    one_hot = np.zeros_like(probs)
    one_hot[np.arange(steps), actions] = 1.0
    w_actor = advantages[:, None] * (probs - one_hot)
    w_actor += -config.entropy_weight * probs * (log_probs + entropy[:, None])
    actor_grads = actor.weighted_grads(obs, w_actor)

    w_critic = (config.value_weight * (values - returns))[:, None]
    critic_grads = critic.weighted_grads(obs, w_critic)
    return loss, actor_grads, critic_grads


def clip_global_norm(grads: ParamStore, max_norm: float) -> None:
    total = np.sqrt(sum(float(np.sum(g**2)) for g in grads.values()))
    if total > max_norm > 0:
        scale = max_norm / total
        for g in grads.values():
            g *= scale


def _checksum(params: ParamStore) -> str:
    digest = hashlib.sha256()
    for name in sorted(params):
        digest.update(name.encode())
        digest.update(np.ascontiguousarray(params[name]).tobytes())
    return digest.hexdigest()


class SharedStore:
    """Versioned global parameters for actor and critic plus one optimizer."""

    def __init__(
        self,
        actor_params: ParamStore,
        critic_params: ParamStore,
        grad_clip: float = 5.0,
        audit: bool = False,
    ):
        self.params: ParamStore = {}
        for name, value in actor_params.items():
            self.params[f"actor.{name}"] = value.copy()
        for name, value in critic_params.items():
            self.params[f"critic.{name}"] = value.copy()
        rates = {
            key: DEFAULT_RATES[key.split(".", 1)[1]] for key in self.params
        }
        self.optimizer = Adam(lr=rates)
        self.grad_clip = grad_clip
        self.audit = audit
        self.version = 0
        self.checksums: Dict[int, str] = {}
        self._lock = threading.Lock()
        if audit:
            self.checksums[0] = _checksum(self.params)

    def snapshot(self) -> Tuple[int, ParamStore, ParamStore]:
        with self._lock:
            version = self.version
            flat = copy_params(self.params)
        actor = {
            k.split(".", 1)[1]: v for k, v in flat.items() if k.startswith("actor.")
        }
        critic = {
            k.split(".", 1)[1]: v for k, v in flat.items() if k.startswith("critic.")
        }
        return version, actor, critic

    def verify_snapshot(self, version: int, actor: ParamStore, critic: ParamStore) -> bool:
        flat = {f"actor.{k}": v for k, v in actor.items()}
        flat.update({f"critic.{k}": v for k, v in critic.items()})
        return self.checksums.get(version) == _checksum(flat)

    def apply(self, actor_grads: ParamStore, critic_grads: ParamStore) -> int:
        flat = {f"actor.{k}": v for k, v in actor_grads.items()}
        flat.update({f"critic.{k}": v for k, v in critic_grads.items()})
        with self._lock:
            if self.grad_clip > 0:
                clip_global_norm(flat, self.grad_clip)
            self.optimizer.step(self.params, flat)
            self.version += 1
            if self.audit:
                self.checksums[self.version] = _checksum(self.params)
            return self.version


@dataclass
class A3cRow:
    global_episode: int
    worker: int
    reward: float


@dataclass
class _Shared:
    store: SharedStore
    counter: "threading.Lock" = field(default_factory=threading.Lock)
    next_episode: int = 0
    torn_snapshots: int = 0


def worker_loop(
    worker_id: int,
    shared: _Shared,
    env,
    env_kind: str,
    actor_config: QModelConfig,
    critic_config: QModelConfig,
    config: A3cConfig,
    seed: int,
    sink: "queue.Queue[Optional[A3cRow]]",
) -> None:
    actor = QuantumApproximator(actor_config, env_kind, {})
    critic = QuantumApproximator(critic_config, env_kind, {})
    version, actor.params, critic.params = shared.store.snapshot()
    act_rng = rng_mod.stream(seed, f"worker{worker_id}")
    env_rng = rng_mod.stream(seed, f"worker{worker_id}-env")
    while True:
        with shared.counter:
            episode = shared.next_episode
            if episode >= config.episodes:
                break
            shared.next_episode += 1
        obs = env.reset(env_rng)
        total = 0.0
        done = False
        while not done:
            frag = RolloutFragment([], [], [], False, None)
            for _ in range(config.n_step):
                probs = policy(actor.q_values(obs))
                action = int(act_rng.choice(len(probs), p=probs))
                next_obs, reward, done = env.step(action)
                frag.obs.append(obs)
                frag.actions.append(action)
                frag.rewards.append(reward)
                total += reward
                obs = next_obs
                if done:
                    frag.terminal = True
                    break
            if not frag.terminal:
                frag.bootstrap_obs = obs
            _, actor_grads, critic_grads = a3c_loss(frag, actor, critic, config)
            shared.store.apply(actor_grads, critic_grads)
            version, a_params, c_params = shared.store.snapshot()
            if shared.store.audit and not shared.store.verify_snapshot(
                version, a_params, c_params
            ):
                with shared.counter:
                    shared.torn_snapshots += 1
            actor.params = a_params
            critic.params = c_params
        sink.put(A3cRow(episode, worker_id, total))
    sink.put(None)


def run_a3c(
    config: A3cConfig,
    env_kind: str,
    actor_config: QModelConfig,
    critic_config: QModelConfig,
    seed: int,
    on_row=None,
    env_factory=None,
) -> Tuple[List[A3cRow], SharedStore, int]:
    """Run the worker ensemble; returns (rows in completion order, store,
    torn-snapshot count).

    ``env_factory`` builds one environment per worker; the default
    constructs the named environment with its standard settings.
    """
    if env_factory is None:
        env_factory = lambda: make_env(env_kind, seed=seed)
    init_rng = rng_mod.stream(seed, "init")
    probe_env = env_factory()
    actor = QuantumApproximator.create(
        actor_config, env_kind, probe_env.obs_dim, init_rng
    )
    critic = QuantumApproximator.create(
        critic_config, env_kind, probe_env.obs_dim, init_rng
    )
    store = SharedStore(
        actor.params, critic.params, grad_clip=config.grad_clip, audit=config.audit
    )
    shared = _Shared(store=store)
    sink: "queue.Queue[Optional[A3cRow]]" = queue.Queue()
    threads = []
    for w in range(config.workers):
        env = env_factory()
        t = threading.Thread(
            target=worker_loop,
            args=(
                w,
                shared,
                env,
                env_kind,
                actor_config,
                critic_config,
                config,
                seed,
                sink,
            ),
            daemon=True,
        )
        threads.append(t)
    for t in threads:
        t.start()
    rows: List[A3cRow] = []
    finished = 0
    while finished < config.workers:
        item = sink.get()
        if item is None:
            finished += 1
            continue
        rows.append(item)
        if on_row is not None and on_row(item):
            # stop claiming new episodes; workers drain and exit
            with shared.counter:
                shared.next_episode = config.episodes
    for t in threads:
        t.join()
    return rows, store, shared.torn_snapshots
