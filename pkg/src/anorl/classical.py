"""Classical trainable pieces: input-reduction layer and Adam optimizer."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Mapping, Tuple, Union

import numpy as np

from .errors import ConfigurationError, NumericError


@dataclass
class LinearLayer:
    """Affine map followed by pi*tanh, squashing outputs into (-pi, pi).

    Used to reduce high-dimensional observations to one encoding angle
    per qubit.
    """

    weights: np.ndarray  # (out_dim, in_dim)
    bias: np.ndarray  # (out_dim,)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[0],):
            raise ConfigurationError("weights (out,in) and bias (out,) required")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise NumericError("layer parameters must be finite")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


def random_linear(
    in_dim: int, out_dim: int, rng: np.random.Generator
) -> LinearLayer:
    scale = 1.0 / np.sqrt(in_dim)
    return LinearLayer(rng.uniform(-scale, scale, (out_dim, in_dim)), np.zeros(out_dim))


def linear_forward(layer: LinearLayer, x: np.ndarray) -> np.ndarray:
    """pi * tanh(W x + b); accepts (in,) or (B, in)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != layer.in_dim:
        raise ConfigurationError(
            f"input length {x.shape[-1]} != in_dim {layer.in_dim}"
        )
    return np.pi * np.tanh(x @ layer.weights.T + layer.bias)


def linear_backward(
    layer: LinearLayer, x: np.ndarray, upstream: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Chain rule through pi*tanh and the affine map.

    ``x`` and ``upstream`` may be single vectors or (B, ...) batches;
    batched inputs return gradients summed over the batch.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    upstream = np.atleast_2d(np.asarray(upstream, dtype=np.float64))
    pre = x @ layer.weights.T + layer.bias
    g = upstream * np.pi * (1.0 - np.tanh(pre) ** 2)
    return g.T @ x, g.sum(axis=0)


ParamStore = Dict[str, np.ndarray]


def copy_params(params: ParamStore) -> ParamStore:
    return {k: v.copy() for k, v in params.items()}


@dataclass
class Adam:
    """Adaptive-moment optimizer over named parameter blocks.

    ``lr`` is either one rate or a per-block mapping (missing blocks fall
    back to ``default_lr``). A non-finite gradient rejects the whole step
    and leaves state untouched.
    """

    lr: Union[float, Mapping[str, float]] = 1e-3
    default_lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: ParamStore = field(default_factory=dict)
    v: ParamStore = field(default_factory=dict)

    def rate(self, name: str) -> float:
        if isinstance(self.lr, Mapping):
            return float(self.lr.get(name, self.default_lr))
        return float(self.lr)

    def step(self, params: ParamStore, grads: ParamStore) -> None:
        for name, g in grads.items():
            if not np.all(np.isfinite(g)):
                raise NumericError(f"non-finite gradient in block {name!r}")
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for name, g in grads.items():
            if name not in self.m:
                self.m[name] = np.zeros_like(params[name])
                self.v[name] = np.zeros_like(params[name])
            self.m[name] = self.beta1 * self.m[name] + (1 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1 - self.beta2) * g**2
            m_hat = self.m[name] / bc1
            v_hat = self.v[name] / bc2
            params[name] -= self.rate(name) * m_hat / (np.sqrt(v_hat) + self.eps)
