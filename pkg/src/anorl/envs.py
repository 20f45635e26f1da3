"""Benchmark environments and feature preprocessing.

All environments are deterministic given the generator passed to
``reset``: identical seeds reproduce identical episodes bit-exactly.
Stepping a finished episode raises ``UsageError``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Set, Tuple

import numpy as np

from .errors import ConfigurationError, UsageError

# CartPole physics constants (standard Euler-integrated dynamics)
GRAVITY = 9.8
CART_MASS = 1.0
POLE_MASS = 0.1
TOTAL_MASS = CART_MASS + POLE_MASS
POLE_HALF_LENGTH = 0.5
POLE_MASS_LENGTH = POLE_MASS * POLE_HALF_LENGTH
FORCE_MAG = 10.0
TAU = 0.02
X_LIMIT = 2.4
THETA_LIMIT = 12.0 * 2.0 * np.pi / 360.0
CARTPOLE_MAX_STEPS = 500

# MountainCar constants
MC_POS_MIN, MC_POS_MAX = -1.2, 0.6
MC_VEL_LIMIT = 0.07
MC_GOAL = 0.5
MC_FORCE = 0.001
MC_GRAVITY = 0.0025
MC_MAX_STEPS = 200


class CartPole:
    """Pole balancing; reward 1 per step, episode capped at 500 steps."""

    n_actions = 2
    obs_dim = 4

    def __init__(self):
        self.state: Optional[np.ndarray] = None
        self.steps = 0
        self.terminal = True

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        self.state = rng.uniform(-0.05, 0.05, 4)
        self.steps = 0
        self.terminal = False
        return self.state.copy()

    def step(self, action: int) -> Tuple[np.ndarray, float, bool]:
        if self.terminal:
            raise UsageError("episode finished; call reset")
        if action not in (0, 1):
            raise ConfigurationError(f"invalid CartPole action {action}")
        x, x_dot, theta, theta_dot = self.state
        force = FORCE_MAG if action == 1 else -FORCE_MAG
        cos_t = np.cos(theta)
        sin_t = np.sin(theta)
        temp = (force + POLE_MASS_LENGTH * theta_dot**2 * sin_t) / TOTAL_MASS
        theta_acc = (GRAVITY * sin_t - cos_t * temp) / (
            POLE_HALF_LENGTH * (4.0 / 3.0 - POLE_MASS * cos_t**2 / TOTAL_MASS)
        )
        x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos_t / TOTAL_MASS
        x += TAU * x_dot
        x_dot += TAU * x_acc
        theta += TAU * theta_dot
        theta_dot += TAU * theta_acc
        self.state = np.array([x, x_dot, theta, theta_dot])
        self.steps += 1
        fell = abs(x) > X_LIMIT or abs(theta) > THETA_LIMIT
        self.terminal = fell or self.steps >= CARTPOLE_MAX_STEPS
        return self.state.copy(), 1.0, self.terminal


class MountainCar:
    """Underpowered car; reward -1 per step until x >= 0.5 or 200 steps."""

    n_actions = 3
    obs_dim = 2

    def __init__(self):
        self.state: Optional[np.ndarray] = None
        self.steps = 0
        self.terminal = True

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        self.state = np.array([rng.uniform(-0.6, -0.4), 0.0])
        self.steps = 0
        self.terminal = False
        return self.state.copy()

    @property
    def reached_goal(self) -> bool:
        return self.state is not None and self.state[0] >= MC_GOAL

    def step(self, action: int) -> Tuple[np.ndarray, float, bool]:
        if self.terminal:
            raise UsageError("episode finished; call reset")
        if action not in (0, 1, 2):
            raise ConfigurationError(f"invalid MountainCar action {action}")
        pos, vel = self.state
        vel += MC_FORCE * (action - 1) - MC_GRAVITY * np.cos(3.0 * pos)
        vel = float(np.clip(vel, -MC_VEL_LIMIT, MC_VEL_LIMIT))
        pos = float(np.clip(pos + vel, MC_POS_MIN, MC_POS_MAX))
        if pos <= MC_POS_MIN and vel < 0.0:
            vel = 0.0
        self.state = np.array([pos, vel])
        self.steps += 1
        self.terminal = pos >= MC_GOAL or self.steps >= MC_MAX_STEPS
        return self.state.copy(), -1.0, self.terminal


# Grid orientations: 0 right, 1 down, 2 left, 3 up (row, col deltas)
_HEADINGS = [(0, 1), (1, 0), (0, -1), (-1, 0)]
TURN_LEFT, TURN_RIGHT, FORWARD = 0, 1, 2


class GridWorld:
    """Turn-or-move navigation to a goal tile on a square grid.

    Reaching the goal ends the episode with reward
    1 - 0.9 * steps_used / max_steps (or a flat +1 with
    ``sparse_reward``); every other step pays zero. The observation is a
    flat vector: normalized position, heading one-hot, and wall/goal
    flags for the 3x3 neighborhood (off-grid cells read as walls).
    """

    n_actions = 3

    def __init__(
        self,
        size: int,
        walls: Optional[Set[Tuple[int, int]]] = None,
        sparse_reward: bool = False,
    ):
        if size < 2:
            raise ConfigurationError("grid size must be >= 2")
        self.size = size
        self.walls = set(walls or ())
        self.sparse_reward = sparse_reward
        self.max_steps = 4 * size * size
        self.goal = (size - 1, size - 1)
        self.pos = (0, 0)
        self.heading = 0
        self.steps = 0
        self.terminal = True
        if self.goal in self.walls or self.pos in self.walls:
            raise ConfigurationError("start/goal cell blocked by a wall")

    @property
    def obs_dim(self) -> int:
        return 2 + 4 + 9 + 9

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        del rng  # layout and start are fixed; signature kept uniform
        self.pos = (0, 0)
        self.heading = 0
        self.steps = 0
        self.terminal = False
        return self._observe()

    def _blocked(self, cell: Tuple[int, int]) -> bool:
        r, c = cell
        if not (0 <= r < self.size and 0 <= c < self.size):
            return True
        return cell in self.walls

    def _observe(self) -> np.ndarray:
        r, c = self.pos
        norm = self.size - 1
        obs = np.zeros(self.obs_dim)
        obs[0] = r / norm
        obs[1] = c / norm
        obs[2 + self.heading] = 1.0
        i = 6
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                cell = (r + dr, c + dc)
                obs[i] = 1.0 if self._blocked(cell) else 0.0
                obs[i + 9] = 1.0 if cell == self.goal else 0.0
                i += 1
        return obs

    def step(self, action: int) -> Tuple[np.ndarray, float, bool]:
        if self.terminal:
            raise UsageError("episode finished; call reset")
        if action not in (TURN_LEFT, TURN_RIGHT, FORWARD):
            raise ConfigurationError(f"invalid grid action {action}")
        if action == TURN_LEFT:
            self.heading = (self.heading - 1) % 4
        elif action == TURN_RIGHT:
            self.heading = (self.heading + 1) % 4
        else:
            dr, dc = _HEADINGS[self.heading]
            nxt = (self.pos[0] + dr, self.pos[1] + dc)
            if not self._blocked(nxt):
                self.pos = nxt
        self.steps += 1
        reward = 0.0
        if self.pos == self.goal:
            self.terminal = True
            reward = (
                1.0
                if self.sparse_reward
                else 1.0 - 0.9 * self.steps / self.max_steps
            )
        elif self.steps >= self.max_steps:
            self.terminal = True
        return self._observe(), reward, self.terminal


def simple_crossing(seed: int, sparse_reward: bool = False) -> GridWorld:
    """9x9 grid split by one vertical wall with a single seeded gap."""
    size = 9
    rng = np.random.default_rng(seed)
    gap_row = int(rng.integers(0, size))
    wall_col = size // 2
    walls = {(r, wall_col) for r in range(size) if r != gap_row}
    return GridWorld(size, walls, sparse_reward)


def make_env(env_kind: str, seed: int = 0, grid_size: int = 8, sparse_reward: bool = False):
    if env_kind == "cartpole":
        return CartPole()
    if env_kind == "mountaincar":
        return MountainCar()
    if env_kind == "minigrid8x8":
        return GridWorld(8, sparse_reward=sparse_reward)
    if env_kind == "simplecrossing":
        return simple_crossing(seed, sparse_reward=sparse_reward)
    if env_kind == "grid":
        return GridWorld(grid_size, sparse_reward=sparse_reward)
    raise ConfigurationError(f"unknown environment {env_kind!r}")


def preprocess(obs: np.ndarray, env_kind: str, n_features: int) -> np.ndarray:
    """Map a raw observation to encoding angles (or linear-layer input).

    Bounded components are scaled by their bound into [-1, 1] then by
    pi/2; unbounded velocities go through arctan. MountainCar features
    are duplicated to fill the register (4 features for the 3-local
    setup, 6 for the 6-local one). Grid observations pass through
    untouched for the classical reduction layer.
    """
    obs = np.asarray(obs, dtype=np.float64)
    if env_kind == "cartpole":
        return np.array(
            [
                obs[0] / X_LIMIT * (np.pi / 2),
                np.arctan(obs[1]),
                obs[2] / THETA_LIMIT * (np.pi / 2),
                np.arctan(obs[3]),
            ]
        )
    if env_kind == "mountaincar":
        p = ((obs[0] - MC_POS_MIN) / (MC_POS_MAX - MC_POS_MIN) * 2.0 - 1.0) * (
            np.pi / 2
        )
        v = obs[1] / MC_VEL_LIMIT * (np.pi / 2)
        if n_features % 2:
            raise ConfigurationError("MountainCar needs an even feature count")
        return np.tile([p, v], n_features // 2)
    if env_kind in ("minigrid8x8", "simplecrossing", "grid"):
        return obs
    raise ConfigurationError(f"unknown environment {env_kind!r}")
