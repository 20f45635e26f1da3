"""The quantum function approximator: encoding, variational layers, readout.

Circuit structure for n qubits:

* encoding: H on every qubit, then RY(x_i) on qubit i;
* variational layer (repeated ``n_layers`` times): two-stage CNOT
  entangler - (0,1), (2,3), ... then (1,2), (3,4), ... - followed by an
  RX, RY, RZ triple on each qubit with learned angles;
* readout: either one trainable k-local Hermitian observable per sliding
  window (the first ``n_outputs`` windows give the logits), or fixed
  Pauli-Z on qubits 0..n_outputs-1.

All heavy paths are batched: ``forward_batch`` evaluates many feature
rows (and optionally many theta variants, for shift-rule gradients) in
one numpy pass.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import observable, qstate
from .errors import ConfigurationError, NumericError
from .observable import AnoObservable, build_groups
from .qstate import StateVector


class Mode(str, enum.Enum):
    ANO_WITH_ROTATION = "ano_with_rotation"
    ROTATION_ONLY = "rotation_only"
    MEASUREMENT_ONLY = "measurement_only"

    @property
    def uses_ano(self) -> bool:
        return self is not Mode.ROTATION_ONLY


@dataclass
class QModelConfig:
    n_qubits: int
    n_layers: int
    locality: int
    mode: Mode
    n_outputs: int

    def __post_init__(self):
        self.mode = Mode(self.mode)
        if not 1 <= self.n_qubits <= qstate.MAX_QUBITS:
            raise ConfigurationError(f"n_qubits out of range: {self.n_qubits}")
        if self.n_layers < 0:
            raise ConfigurationError("n_layers must be >= 0")
        if self.n_outputs < 1:
            raise ConfigurationError("n_outputs must be >= 1")
        if self.n_outputs > self.n_qubits:
            raise ConfigurationError(
                "n_outputs cannot exceed n_qubits (one logit per qubit/window)"
            )
        if self.mode.uses_ano and not 1 <= self.locality <= self.n_qubits:
            raise ConfigurationError(
                f"locality must be in [1, {self.n_qubits}], got {self.locality}"
            )

    @property
    def effective_layers(self) -> int:
        """Variational repetitions actually applied (0 in measurement-only)."""
        return 0 if self.mode is Mode.MEASUREMENT_ONLY else self.n_layers

    @property
    def theta_shape(self) -> Tuple[int, int, int]:
        return (self.effective_layers, self.n_qubits, 3)


@dataclass
class ThetaParams:
    angles: np.ndarray  # (n_layers, n_qubits, 3): RX, RY, RZ per qubit

    def __post_init__(self):
        self.angles = np.asarray(self.angles, dtype=np.float64)
        if self.angles.ndim != 3 or self.angles.shape[-1] != 3:
            raise ConfigurationError("theta angles must have shape (L, n, 3)")
        if not np.all(np.isfinite(self.angles)):
            raise NumericError("theta angles must be finite")

    def copy(self) -> "ThetaParams":
        return ThetaParams(self.angles.copy())


def random_theta(config: QModelConfig, rng: np.random.Generator) -> ThetaParams:
    # small angles keep early outputs near the |+>^n baseline
    return ThetaParams(rng.normal(0.0, 0.1, config.theta_shape))


def random_observable(config: QModelConfig, rng: np.random.Generator) -> AnoObservable:
    scheme = build_groups(config.n_qubits, config.locality)
    return AnoObservable(
        scheme,
        [observable.random_params(config.locality, rng) for _ in scheme.groups],
    )


def entangler_pairs(n_qubits: int) -> List[Tuple[int, int]]:
    """Two-stage neighbor CNOTs: even-offset pairs, then odd-offset pairs."""
    stage1 = [(q, q + 1) for q in range(0, n_qubits - 1, 2)]
    stage2 = [(q, q + 1) for q in range(1, n_qubits - 1, 2)]
    return stage1 + stage2


def group_matrices(ano: AnoObservable) -> List[np.ndarray]:
    return [observable.materialize(hp) for hp in ano.per_group]


def _z_signs(n_qubits: int, qubit: int) -> np.ndarray:
    bits = (np.arange(1 << n_qubits) >> (n_qubits - 1 - qubit)) & 1
    return 1.0 - 2.0 * bits


def encode_batch(features: np.ndarray, n_qubits: int) -> np.ndarray:
    """H then RY(x_i) on each qubit, from |0...0>; features shape (B, n)."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != n_qubits:
        raise ConfigurationError(
            f"features must have shape (batch, {n_qubits}), got {features.shape}"
        )
    amps = qstate.zero_states(features.shape[0], n_qubits)
    for q in range(n_qubits):
        qstate.hadamard_(amps, n_qubits, q)
    for q in range(n_qubits):
        qstate.rotation_(amps, n_qubits, q, "y", features[:, q])
    return amps


def variational_batch(
    amps: np.ndarray, n_qubits: int, theta: np.ndarray
) -> np.ndarray:
    """Apply the entangler+rotation layers in place.

    ``theta`` has shape (L, n, 3) for shared angles or (B, L, n, 3) for
    per-row angles; L = 0 is the identity.
    """
    theta = np.asarray(theta, dtype=np.float64)
    per_row = theta.ndim == 4
    n_layers = theta.shape[-3] if theta.size else 0
    pairs = entangler_pairs(n_qubits)
    for layer in range(n_layers):
        for control, target in pairs:
            qstate.cnot_(amps, n_qubits, control, target)
        for q in range(n_qubits):
            block = theta[:, layer, q] if per_row else theta[layer, q]
            qstate.rotation_triple_(amps, n_qubits, q, block)
    return amps


def forward_batch(
    config: QModelConfig,
    theta: np.ndarray,
    mats: Optional[Sequence[np.ndarray]],
    features: np.ndarray,
    return_densities: bool = False,
):
    """Logits for a batch of feature rows, shape (B, n_outputs).

    ``mats`` are the materialized per-group observables (None for
    rotation-only). With ``return_densities`` also returns the reduced
    density matrix stack per readout group, for linear phi-gradients.
    """
    return forward_from_encoded(
        config,
        theta,
        mats,
        encode_batch(features, config.n_qubits),
        return_densities,
    )


def forward_from_encoded(
    config: QModelConfig,
    theta: np.ndarray,
    mats: Optional[Sequence[np.ndarray]],
    encoded: np.ndarray,
    return_densities: bool = False,
):
    """As ``forward_batch`` but starting from already-encoded amplitudes.

    Consumes ``encoded`` in place; callers keeping the encoding around
    (e.g. to reuse it across shift variants) must pass a copy.
    """
    n = config.n_qubits
    amps = encoded
    if config.effective_layers > 0:
        variational_batch(amps, n, theta)
    if config.mode.uses_ano:
        if mats is None:
            raise ConfigurationError("ANO modes require observable matrices")
        groups = build_groups(n, config.locality).groups[: config.n_outputs]
        if return_densities:
            rhos = [qstate.reduced_density_batch(amps, n, g) for g in groups]
            logits = np.stack(
                [
                    np.einsum("bij,ji->b", rho, mat).real
                    for rho, mat in zip(rhos, mats)
                ],
                axis=1,
            )
            return logits, rhos
        return np.stack(
            [
                qstate.group_expectation(amps, n, g, mat)
                for g, mat in zip(groups, mats)
            ],
            axis=1,
        )
    if mats is not None:
        raise ConfigurationError("rotation-only mode takes no observable")
    probs = np.abs(amps) ** 2
    logits = np.stack(
        [probs @ _z_signs(n, q) for q in range(config.n_outputs)], axis=1
    )
    if return_densities:
        return logits, []
    return logits


# ---------------------------------------------------------------------------
# Single-sample API.
# ---------------------------------------------------------------------------

def encode(features: Sequence[float]) -> StateVector:
    """Encode one feature vector; one qubit per feature."""
    features = np.asarray(features, dtype=np.float64)
    amps = encode_batch(features.reshape(1, -1), features.shape[0])
    return StateVector(features.shape[0], amps[0])


def variational(sv: StateVector, theta: ThetaParams) -> StateVector:
    if theta.angles.size and theta.angles.shape[1] != sv.n_qubits:
        raise ConfigurationError("theta qubit dimension mismatch")
    amps = sv.amps.copy().reshape(1, -1)
    variational_batch(amps, sv.n_qubits, theta.angles)
    return StateVector(sv.n_qubits, amps[0])


def forward(
    config: QModelConfig,
    theta: ThetaParams,
    ano: Optional[AnoObservable],
    features: Sequence[float],
) -> np.ndarray:
    """Logit vector of Q-values / policy scores for one input."""
    if config.mode.uses_ano:
        if ano is None:
            raise ConfigurationError(f"mode {config.mode.value} requires an observable")
        mats = group_matrices(ano)
    else:
        if ano is not None:
            raise ConfigurationError("rotation-only mode takes no observable")
        mats = None
    features = np.asarray(features, dtype=np.float64).reshape(1, -1)
    return forward_batch(config, theta.angles, mats, features)[0]
