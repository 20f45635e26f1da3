"""Gradients of the quantum model output.

Rotation angles (both variational theta and the encoding features) are
differentiated with the parameter-shift rule, which is exact for gates
generated by Pauli operators: df/dt = (f(t + pi/2) - f(t - pi/2)) / 2.
Observable parameters enter the output linearly, so their gradient is
read directly off the reduced density matrix of the measured window.

``weighted_logit_grads`` is the batched workhorse used by the trainers:
it differentiates sum_{b,k} W[b,k] * logit_k(x_b) in a single stacked
circuit evaluation per shift direction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from . import observable, qmodel, qstate
from .observable import AnoObservable, HermitianParams, build_groups
from .qmodel import QModelConfig, ThetaParams

SHIFT = np.pi / 2


@dataclass
class GradBundle:
    d_theta: np.ndarray  # (L, n, 3)
    d_phi: Optional[List[HermitianParams]]  # per group; None without ANO
    d_features: Optional[np.ndarray]  # (n,); None when not requested


@dataclass
class PhiGrads:
    """Per-group phi gradients stacked over groups."""

    d_diag: np.ndarray  # (G, K)
    d_upper_re: np.ndarray  # (G, M)
    d_upper_im: np.ndarray  # (G, M)

    @classmethod
    def zeros(cls, n_groups: int, k_local: int) -> "PhiGrads":
        dim = 1 << k_local
        m = observable.triangle_size(dim)
        return cls(
            np.zeros((n_groups, dim)),
            np.zeros((n_groups, m)),
            np.zeros((n_groups, m)),
        )

    def to_params(self, k_local: int) -> List[HermitianParams]:
        return [
            HermitianParams(
                k_local, self.d_diag[g], self.d_upper_re[g], self.d_upper_im[g]
            )
            for g in range(self.d_diag.shape[0])
        ]


def _mats(config: QModelConfig, ano: Optional[AnoObservable]):
    if config.mode.uses_ano:
        if ano is None:
            raise ValueError("ANO mode requires an observable")
        return qmodel.group_matrices(ano)
    return None


def weighted_logit_grads(
    config: QModelConfig,
    theta: np.ndarray,
    mats: Optional[Sequence[np.ndarray]],
    features: np.ndarray,
    weights: np.ndarray,
    need_features: bool = False,
) -> Tuple[np.ndarray, np.ndarray, Optional[PhiGrads], Optional[np.ndarray]]:
    """Gradient of sum_{b,k} weights[b,k] * logit_k(features[b]).

    Returns (base_logits, d_theta, phi_grads, d_features) where
    d_features[b, i] is the per-sample gradient (weighted over its own
    logits only), as needed for backprop into a classical front layer.
    """
    features = np.asarray(features, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    batch = features.shape[0]
    theta = np.asarray(theta, dtype=np.float64)

    encoded = qmodel.encode_batch(features, config.n_qubits)
    if config.mode.uses_ano:
        base_logits, rhos = qmodel.forward_from_encoded(
            config, theta, mats, encoded.copy(), return_densities=True
        )
        n_groups = config.n_qubits
        phi = PhiGrads.zeros(n_groups, config.locality)
        for g, rho in enumerate(rhos):  # only the readout groups are nonzero
            d_diag, d_re, d_im = observable.grad_from_density(rho)
            w = weights[:, g]
            phi.d_diag[g] = w @ d_diag
            phi.d_upper_re[g] = w @ d_re
            phi.d_upper_im[g] = w @ d_im
    else:
        base_logits = qmodel.forward_from_encoded(
            config, theta, mats, encoded.copy()
        )
        phi = None

    n_ang = int(np.prod(config.theta_shape))
    d_theta = np.zeros(config.theta_shape)
    if n_ang:
        flat = theta.reshape(-1)
        variants = np.repeat(flat[None, :], 2 * n_ang, axis=0)
        idx = np.arange(n_ang)
        variants[idx, idx] += SHIFT
        variants[n_ang + idx, idx] -= SHIFT
        theta_stack = np.repeat(
            variants.reshape((2 * n_ang,) + config.theta_shape), batch, axis=0
        )
        enc_stack = np.tile(encoded, (2 * n_ang, 1))
        logits = qmodel.forward_from_encoded(config, theta_stack, mats, enc_stack)
        logits = logits.reshape(2, n_ang, batch, config.n_outputs)
        slopes = (logits[0] - logits[1]) / 2.0
        d_theta = np.einsum("jbk,bk->j", slopes, weights).reshape(
            config.theta_shape
        )

    d_features = None
    if need_features:
        n = config.n_qubits
        feat_stack = np.tile(features, (2 * n, 1))
        for i in range(n):
            feat_stack[i * batch : (i + 1) * batch, i] += SHIFT
            feat_stack[(n + i) * batch : (n + i + 1) * batch, i] -= SHIFT
        theta_arg = theta
        logits = qmodel.forward_batch(config, theta_arg, mats, feat_stack)
        logits = logits.reshape(2, n, batch, config.n_outputs)
        slopes = (logits[0] - logits[1]) / 2.0
        d_features = np.einsum("ibk,bk->bi", slopes, weights)

    return base_logits, d_theta, phi, d_features


def _one_hot_weights(n_outputs: int, output_index: int) -> np.ndarray:
    w = np.zeros((1, n_outputs))
    w[0, output_index] = 1.0
    return w


def grad_theta(
    config: QModelConfig,
    theta: ThetaParams,
    ano: Optional[AnoObservable],
    features: Sequence[float],
    output_index: int,
) -> np.ndarray:
    """Parameter-shift gradient of one logit w.r.t. every rotation angle."""
    features = np.asarray(features, dtype=np.float64).reshape(1, -1)
    _, d_theta, _, _ = weighted_logit_grads(
        config,
        theta.angles,
        _mats(config, ano),
        features,
        _one_hot_weights(config.n_outputs, output_index),
    )
    return d_theta


def grad_phi(
    config: QModelConfig,
    theta: ThetaParams,
    ano: AnoObservable,
    features: Sequence[float],
    output_index: int,
) -> List[HermitianParams]:
    """Linear-form phi gradient; groups feeding other logits get zeros."""
    features = np.asarray(features, dtype=np.float64).reshape(1, -1)
    n = config.n_qubits
    amps = qmodel.encode_batch(features, n)
    if config.effective_layers > 0:
        qmodel.variational_batch(amps, n, theta.angles)
    groups = build_groups(n, config.locality).groups
    phi = PhiGrads.zeros(n, config.locality)
    rho = qstate.reduced_density_batch(amps, n, groups[output_index])[0]
    d_diag, d_re, d_im = observable.grad_from_density(rho)
    phi.d_diag[output_index] = d_diag
    phi.d_upper_re[output_index] = d_re
    phi.d_upper_im[output_index] = d_im
    return phi.to_params(config.locality)


def grad_features(
    config: QModelConfig,
    theta: ThetaParams,
    ano: Optional[AnoObservable],
    features: Sequence[float],
    output_index: int,
) -> np.ndarray:
    """Shift-rule gradient of one logit w.r.t. the encoding angles."""
    features = np.asarray(features, dtype=np.float64).reshape(1, -1)
    _, _, _, d_features = weighted_logit_grads(
        config,
        theta.angles,
        _mats(config, ano),
        features,
        _one_hot_weights(config.n_outputs, output_index),
        need_features=True,
    )
    return d_features[0]


def bundle(
    config: QModelConfig,
    theta: ThetaParams,
    ano: Optional[AnoObservable],
    features: Sequence[float],
    output_index: int,
    need_features: bool = False,
) -> GradBundle:
    d_theta = grad_theta(config, theta, ano, features, output_index)
    d_phi = (
        grad_phi(config, theta, ano, features, output_index)
        if config.mode.uses_ano
        else None
    )
    d_feat = (
        grad_features(config, theta, ano, features, output_index)
        if need_features
        else None
    )
    return GradBundle(d_theta, d_phi, d_feat)


def fd_oracle(
    fn: Callable[[np.ndarray], float], x: np.ndarray, step: float = 1e-6
) -> np.ndarray:
    """Central finite differences of a scalar function; test-side oracle."""
    if not 1e-8 <= step <= 1e-3:
        raise ValueError("step must be within [1e-8, 1e-3]")
    x = np.asarray(x, dtype=np.float64)
    flat = x.reshape(-1)
    grad = np.zeros_like(flat)
    for i in range(flat.size):
        up = flat.copy()
        dn = flat.copy()
        up[i] += step
        dn[i] -= step
        grad[i] = (fn(up.reshape(x.shape)) - fn(dn.reshape(x.shape))) / (2 * step)
    return grad.reshape(x.shape)
