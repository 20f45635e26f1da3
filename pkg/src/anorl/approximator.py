"""Trainable function approximators behind a small common interface.

Trainers only rely on: ``n_actions``, ``q_values(obs)``, ``clone()``
(frozen target copies), ``get_params``/``set_params`` and a gradient
entry point. ``QuantumApproximator`` is the circuit-backed model
(optionally fronted by a classical reduction layer for grid
observations); ``TabularQ`` is a lookup-table stand-in used to validate
the training loops independently of the quantum model.
"""

from __future__ import annotations

from typing import Callable, Dict, Optional

import numpy as np

from . import classical, envs, gradients, qmodel
from .classical import LinearLayer, ParamStore, copy_params
from .gradients import PhiGrads
from .observable import AnoObservable, HermitianParams, build_groups, triangle_size
from .qmodel import Mode, QModelConfig

DEFAULT_RATES = {
    "theta": 1e-3,
    "lin_w": 1e-3,
    "lin_b": 1e-3,
    "phi_diag": 1e-2,
    "phi_re": 1e-2,
    "phi_im": 1e-2,
}


class QuantumApproximator:
    """Quantum model plus optional classical front layer, with named params."""

    def __init__(self, config: QModelConfig, env_kind: str, params: ParamStore):
        self.config = config
        self.env_kind = env_kind
        self.params = params
        self.n_actions = config.n_outputs

    @classmethod
    def create(
        cls,
        config: QModelConfig,
        env_kind: str,
        obs_dim: int,
        rng: np.random.Generator,
    ) -> "QuantumApproximator":
        params: ParamStore = {"theta": rng.normal(0.0, 0.1, config.theta_shape)}
        if config.mode.uses_ano:
            n_groups = config.n_qubits
            dim = 1 << config.locality
            m = triangle_size(dim)
            params["phi_diag"] = rng.normal(0.0, 0.1, (n_groups, dim))
            params["phi_re"] = rng.normal(0.0, 0.05, (n_groups, m))
            params["phi_im"] = rng.normal(0.0, 0.05, (n_groups, m))
        needs_linear = env_kind in ("minigrid8x8", "simplecrossing", "grid")
        if needs_linear:
            env = envs.make_env(env_kind)
            layer = classical.random_linear(env.obs_dim, config.n_qubits, rng)
            params["lin_w"] = layer.weights
            params["lin_b"] = layer.bias
        return cls(config, env_kind, params)

    # -- parameter plumbing -------------------------------------------------

    @property
    def has_linear(self) -> bool:
        return "lin_w" in self.params

    def get_params(self) -> ParamStore:
        return copy_params(self.params)

    def set_params(self, params: ParamStore) -> None:
        self.params = copy_params(params)

    def clone(self) -> "QuantumApproximator":
        return QuantumApproximator(self.config, self.env_kind, self.get_params())

    def _layer(self) -> LinearLayer:
        return LinearLayer(self.params["lin_w"], self.params["lin_b"])

    def observable_view(self) -> Optional[AnoObservable]:
        if not self.config.mode.uses_ano:
            return None
        scheme = build_groups(self.config.n_qubits, self.config.locality)
        return AnoObservable(
            scheme,
            [
                HermitianParams(
                    self.config.locality,
                    self.params["phi_diag"][g],
                    self.params["phi_re"][g],
                    self.params["phi_im"][g],
                )
                for g in range(len(scheme.groups))
            ],
        )

    def _mats(self):
        if not self.config.mode.uses_ano:
            return None
        dim = 1 << self.config.locality
        iu = np.triu_indices(dim, 1)
        mats = []
        for g in range(self.config.n_outputs):
            mat = np.zeros((dim, dim), dtype=np.complex128)
            mat[iu] = self.params["phi_re"][g] + 1j * self.params["phi_im"][g]
            mat += mat.conj().T
            mat[np.diag_indices(dim)] = self.params["phi_diag"][g]
            mats.append(mat)
        return mats

    # -- evaluation ---------------------------------------------------------

    def encode_features(self, obs_batch: np.ndarray) -> np.ndarray:
        """Raw observations (B, obs_dim) -> encoding angles (B, n_qubits)."""
        obs_batch = np.atleast_2d(np.asarray(obs_batch, dtype=np.float64))
        feats = np.stack(
            [
                envs.preprocess(row, self.env_kind, self.config.n_qubits)
                for row in obs_batch
            ]
        )
        if self.has_linear:
            feats = classical.linear_forward(self._layer(), feats)
        return feats

    def q_values_batch(self, obs_batch: np.ndarray) -> np.ndarray:
        feats = self.encode_features(obs_batch)
        return qmodel.forward_batch(
            self.config, self.params["theta"], self._mats(), feats
        )

    def q_values(self, obs: np.ndarray) -> np.ndarray:
        return self.q_values_batch(np.asarray(obs)[None, :])[0]

    # -- gradients ----------------------------------------------------------

    def weighted_grads(
        self, obs_batch: np.ndarray, weights: np.ndarray
    ) -> Dict[str, np.ndarray]:
        """Gradient of sum_{b,k} weights[b,k]*logit_k(obs_b) per block."""
        obs_batch = np.atleast_2d(np.asarray(obs_batch, dtype=np.float64))
        feats = self.encode_features(obs_batch)
        _, d_theta, phi, d_feats = gradients.weighted_logit_grads(
            self.config,
            self.params["theta"],
            self._mats(),
            feats,
            weights,
            need_features=self.has_linear,
        )
        grads: Dict[str, np.ndarray] = {"theta": d_theta}
        if phi is not None:
            grads["phi_diag"] = phi.d_diag
            grads["phi_re"] = phi.d_upper_re
            grads["phi_im"] = phi.d_upper_im
        if self.has_linear:
            raw = np.stack(
                [
                    envs.preprocess(row, self.env_kind, self.config.n_qubits)
                    for row in obs_batch
                ]
            )
            d_w, d_b = classical.linear_backward(self._layer(), raw, d_feats)
            grads["lin_w"] = d_w
            grads["lin_b"] = d_b
        return grads

    def train_step(
        self,
        obs_batch: np.ndarray,
        actions: np.ndarray,
        targets: np.ndarray,
        optimizer: classical.Adam,
    ) -> float:
        """One mean-squared Bellman regression step; returns the loss."""
        obs_batch = np.atleast_2d(np.asarray(obs_batch, dtype=np.float64))
        actions = np.asarray(actions, dtype=np.int64)
        targets = np.asarray(targets, dtype=np.float64)
        batch = obs_batch.shape[0]
        logits = self.q_values_batch(obs_batch)
        taken = logits[np.arange(batch), actions]
        residual = taken - targets
        loss = float(np.mean(residual**2))
        weights = np.zeros_like(logits)
        weights[np.arange(batch), actions] = 2.0 * residual / batch
        grads = self.weighted_grads(obs_batch, weights)
        optimizer.step(self.params, grads)
        return loss


class TabularQ:
    """Lookup-table Q-function for discrete states; trainer test hook."""

    def __init__(self, n_states: int, n_actions: int, lr: float = 0.5):
        self.table = np.zeros((n_states, n_actions))
        self.n_actions = n_actions
        self.lr = lr

    @staticmethod
    def _index(obs) -> int:
        return int(np.asarray(obs).reshape(-1)[0])

    def q_values(self, obs) -> np.ndarray:
        return self.table[self._index(obs)].copy()

    def q_values_batch(self, obs_batch) -> np.ndarray:
        return np.stack([self.q_values(o) for o in np.atleast_2d(obs_batch)])

    def get_params(self) -> ParamStore:
        return {"table": self.table.copy()}

    def set_params(self, params: ParamStore) -> None:
        self.table = params["table"].copy()

    def clone(self) -> "TabularQ":
        twin = TabularQ(*self.table.shape, lr=self.lr)
        twin.table = self.table.copy()
        return twin

    def train_step(self, obs_batch, actions, targets, optimizer=None) -> float:
        obs_batch = np.atleast_2d(obs_batch)
        actions = np.asarray(actions, dtype=np.int64)
        targets = np.asarray(targets, dtype=np.float64)
        errs = []
        for obs, action, target in zip(obs_batch, actions, targets):
            i = self._index(obs)
            err = self.table[i, action] - target
            self.table[i, action] -= self.lr * err
            errs.append(err**2)
        return float(np.mean(errs))
