"""Dense statevector simulation for small registers (n <= 8).

Bit ordering convention, used everywhere in this package: qubit 0 is the
MOST significant bit of the amplitude index, so for n qubits the basis
state |b0 b1 ... b_{n-1}> sits at index b0*2^(n-1) + ... + b_{n-1}.

Two API levels:

* ``StateVector`` / ``DensityMatrix`` dataclasses with pure functions
  (``zero_state``, ``apply_hadamard``, ...) - convenient, copy-on-write.
* In-place batched kernels (``hadamard_``, ``rotation_``, ``cnot_``,
  ``reduced_density_batch``) operating on a (batch, 2^n) complex buffer.
  The RL training loops use these; a rotation kernel accepts a per-row
  angle vector so many shifted circuits evaluate in one numpy pass.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, NumericError

MAX_QUBITS = 8

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


@dataclass
class StateVector:
    n_qubits: int
    amps: np.ndarray  # shape (2^n,), complex128

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amps.copy())

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2))


@dataclass
class DensityMatrix:
    k_qubits: int
    entries: np.ndarray  # shape (2^k, 2^k), complex128


def zero_state(n_qubits: int) -> StateVector:
    """|0...0> on ``n_qubits`` qubits."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ConfigurationError(
            f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}"
        )
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


def zero_states(batch: int, n_qubits: int) -> np.ndarray:
    """Batched |0...0> buffer of shape (batch, 2^n)."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ConfigurationError(
            f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}"
        )
    amps = np.zeros((batch, 1 << n_qubits), dtype=np.complex128)
    amps[:, 0] = 1.0
    return amps


def _check_qubit(qubit: int, n_qubits: int) -> None:
    if not 0 <= qubit < n_qubits:
        raise IndexError(f"qubit {qubit} out of range for {n_qubits} qubits")


# ---------------------------------------------------------------------------
# In-place batched kernels. ``amps`` has shape (B, 2^n) and is mutated.
# ---------------------------------------------------------------------------

def _halves(amps: np.ndarray, n_qubits: int, qubit: int) -> np.ndarray:
    # view of shape (B, 2^qubit, 2, 2^(n-qubit-1)); axis 2 indexes the qubit
    batch = amps.shape[0]
    return amps.reshape(batch, 1 << qubit, 2, -1)


def hadamard_(amps: np.ndarray, n_qubits: int, qubit: int) -> None:
    _check_qubit(qubit, n_qubits)
    view = _halves(amps, n_qubits, qubit)
    x0 = view[:, :, 0, :].copy()
    x1 = view[:, :, 1, :]
    view[:, :, 0, :] = (x0 + x1) * _INV_SQRT2
    view[:, :, 1, :] = (x0 - x1) * _INV_SQRT2


def rotation_(
    amps: np.ndarray,
    n_qubits: int,
    qubit: int,
    axis: str,
    angle: float | np.ndarray,
) -> None:
    """Apply exp(-i*angle*sigma_axis/2); ``angle`` may be per-row (B,)."""
    _check_qubit(qubit, n_qubits)
    angle = np.asarray(angle, dtype=np.float64)
    if not np.all(np.isfinite(angle)):
        raise NumericError("rotation angle must be finite")
    half = angle * 0.5
    c = np.cos(half)
    s = np.sin(half)
    if c.ndim == 1:
        c = c[:, None, None]
        s = s[:, None, None]
    view = _halves(amps, n_qubits, qubit)
    if axis in ("z", "Z"):
        view[:, :, 0, :] *= c - 1j * s
        view[:, :, 1, :] *= c + 1j * s
        return
    x0 = view[:, :, 0, :].copy()
    x1 = view[:, :, 1, :]
    if axis in ("x", "X"):
        view[:, :, 0, :] = c * x0 - 1j * s * x1
        view[:, :, 1, :] = -1j * s * x0 + c * x1
    elif axis in ("y", "Y"):
        view[:, :, 0, :] = c * x0 - s * x1
        view[:, :, 1, :] = s * x0 + c * x1
    else:
        raise ConfigurationError(f"unknown rotation axis {axis!r}")


def apply_1q_(
    amps: np.ndarray,
    n_qubits: int,
    qubit: int,
    u00,
    u01,
    u10,
    u11,
) -> None:
    """Apply an arbitrary 1-qubit matrix; entries may be per-row (B,)."""
    _check_qubit(qubit, n_qubits)
    coeffs = []
    for u in (u00, u01, u10, u11):
        u = np.asarray(u)
        coeffs.append(u[:, None, None] if u.ndim == 1 else u)
    u00, u01, u10, u11 = coeffs
    view = _halves(amps, n_qubits, qubit)
    x0 = view[:, :, 0, :].copy()
    x1 = view[:, :, 1, :]
    view[:, :, 0, :] = u00 * x0 + u01 * x1
    view[:, :, 1, :] = u10 * x0 + u11 * x1


def rotation_triple_(
    amps: np.ndarray, n_qubits: int, qubit: int, angles: np.ndarray
) -> None:
    """RX, RY, RZ in sequence, fused into one 2x2 application.

    ``angles`` has shape (3,) or (B, 3) for per-row triples.
    """
    angles = np.asarray(angles, dtype=np.float64)
    if not np.all(np.isfinite(angles)):
        raise NumericError("rotation angles must be finite")
    half = angles * 0.5
    c = np.cos(half)
    s = np.sin(half)
    cx, cy, cz = c[..., 0], c[..., 1], c[..., 2]
    sx, sy, sz = s[..., 0], s[..., 1], s[..., 2]
    # Rx columns
    a00, a10 = cx, -1j * sx
    a01, a11 = -1j * sx, cx
    # Ry * Rx
    b00 = cy * a00 - sy * a10
    b10 = sy * a00 + cy * a10
    b01 = cy * a01 - sy * a11
    b11 = sy * a01 + cy * a11
    # Rz * (Ry Rx)
    ez0 = cz - 1j * sz
    ez1 = cz + 1j * sz
    apply_1q_(amps, n_qubits, qubit, ez0 * b00, ez0 * b01, ez1 * b10, ez1 * b11)


def cnot_(amps: np.ndarray, n_qubits: int, control: int, target: int) -> None:
    _check_qubit(control, n_qubits)
    _check_qubit(target, n_qubits)
    if control == target:
        raise IndexError("control and target must differ")
    batch = amps.shape[0]
    nd = amps.reshape((batch,) + (2,) * n_qubits)
    idx: list = [slice(None)] * (n_qubits + 1)
    idx[1 + control] = 1
    sub = nd[tuple(idx)]  # view with the control axis removed
    t_axis = 1 + target - (1 if target > control else 0)
    s0: list = [slice(None)] * sub.ndim
    s1 = list(s0)
    s0[t_axis] = 0
    s1[t_axis] = 1
    tmp = sub[tuple(s0)].copy()
    sub[tuple(s0)] = sub[tuple(s1)]
    sub[tuple(s1)] = tmp


def group_view(
    amps: np.ndarray, n_qubits: int, qubits: Sequence[int]
) -> np.ndarray:
    """Amplitudes reshaped to (B, 2^k, 2^(n-k)) with the given qubits
    (in order) as the row index. Shared kernel for expectations and
    partial traces."""
    qubits = list(qubits)
    if len(set(qubits)) != len(qubits):
        raise IndexError(f"duplicate qubit indices in {qubits}")
    if not 1 <= len(qubits) <= n_qubits:
        raise IndexError("need between 1 and n_qubits qubits")
    for q in qubits:
        _check_qubit(q, n_qubits)
    batch = amps.shape[0]
    nd = amps.reshape((batch,) + (2,) * n_qubits)
    rest = [q for q in range(n_qubits) if q not in qubits]
    perm = [0] + [1 + q for q in qubits] + [1 + q for q in rest]
    k = len(qubits)
    return np.ascontiguousarray(nd.transpose(perm)).reshape(
        batch, 1 << k, 1 << (n_qubits - k)
    )


def group_expectation(
    amps: np.ndarray, n_qubits: int, qubits: Sequence[int], mat: np.ndarray
) -> np.ndarray:
    """<psi| H_on_qubits (x) I_rest |psi> per batch row, without forming
    the reduced density matrix."""
    view = group_view(amps, n_qubits, qubits)
    batch, dim, rest = view.shape
    m = np.ascontiguousarray(view.transpose(1, 0, 2)).reshape(dim, batch * rest)
    hv = mat @ m
    overlap = m.real * hv.real + m.imag * hv.imag
    return overlap.sum(axis=0).reshape(batch, rest).sum(axis=1)


def reduced_density_batch(
    amps: np.ndarray, n_qubits: int, qubits: Sequence[int]
) -> np.ndarray:
    """Partial trace over the complement; returns (B, 2^k, 2^k).

    Row/column order of the result follows the order given in ``qubits``.
    """
    mat = group_view(amps, n_qubits, qubits)
    return np.einsum("bir,bjr->bij", mat, mat.conj())


# ---------------------------------------------------------------------------
# Single-state wrappers (copying, pure).
# ---------------------------------------------------------------------------

def _applied(sv: StateVector, op, *args) -> StateVector:
    amps = sv.amps.copy().reshape(1, -1)
    op(amps, sv.n_qubits, *args)
    return StateVector(sv.n_qubits, amps.reshape(-1))


def apply_hadamard(sv: StateVector, qubit: int) -> StateVector:
    return _applied(sv, hadamard_, qubit)


def apply_rotation(
    sv: StateVector, qubit: int, axis: str, angle: float
) -> StateVector:
    return _applied(sv, rotation_, qubit, axis, angle)


def apply_cnot(sv: StateVector, control: int, target: int) -> StateVector:
    return _applied(sv, cnot_, control, target)


def reduced_density(sv: StateVector, qubits: Sequence[int]) -> DensityMatrix:
    rho = reduced_density_batch(sv.amps.reshape(1, -1), sv.n_qubits, qubits)
    return DensityMatrix(len(list(qubits)), rho[0])
