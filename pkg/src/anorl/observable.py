"""Trainable Hermitian observables over sliding k-qubit windows.

A k-local observable is a dense 2^k x 2^k Hermitian matrix parameterized
by its real diagonal and the real/imaginary parts of its strict upper
triangle; the lower triangle is the conjugate transpose by construction.
Measured windows slide cyclically around the register: group g covers
qubits (g, g+1, ..., g+k-1) mod n, one group per qubit, and each group
owns an independent parameter block.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError, NumericError
from . import qstate
from .qstate import StateVector


def triangle_size(dim: int) -> int:
    return dim * (dim - 1) // 2


@dataclass
class HermitianParams:
    """Parameters (diag, upper_re, upper_im) of a k-qubit Hermitian matrix.

    ``k_local`` is the number of qubits; the matrix dimension is 2^k.
    Upper-triangle entries are ordered row-major, i.e. as produced by
    ``np.triu_indices(dim, 1)``.
    """

    k_local: int
    diag: np.ndarray
    upper_re: np.ndarray
    upper_im: np.ndarray

    def __post_init__(self):
        dim = 1 << self.k_local
        self.diag = np.asarray(self.diag, dtype=np.float64)
        self.upper_re = np.asarray(self.upper_re, dtype=np.float64)
        self.upper_im = np.asarray(self.upper_im, dtype=np.float64)
        if self.diag.shape != (dim,):
            raise ConfigurationError(f"diag must have length {dim}")
        if self.upper_re.shape != (triangle_size(dim),):
            raise ConfigurationError(
                f"upper_re must have length {triangle_size(dim)}"
            )
        if self.upper_im.shape != self.upper_re.shape:
            raise ConfigurationError("upper_im must match upper_re in length")

    @property
    def dim(self) -> int:
        return 1 << self.k_local

    def n_params(self) -> int:
        return self.dim * self.dim

    def copy(self) -> "HermitianParams":
        return HermitianParams(
            self.k_local, self.diag.copy(), self.upper_re.copy(), self.upper_im.copy()
        )


@dataclass
class GroupingScheme:
    n_qubits: int
    k_local: int
    groups: List[Tuple[int, ...]]


@dataclass
class AnoObservable:
    scheme: GroupingScheme
    per_group: List[HermitianParams] = field(default_factory=list)

    def __post_init__(self):
        if len(self.per_group) != len(self.scheme.groups):
            raise ConfigurationError("need one parameter block per group")
        for hp in self.per_group:
            if hp.k_local != self.scheme.k_local:
                raise ConfigurationError("all blocks must share the scheme's k")

    def copy(self) -> "AnoObservable":
        return AnoObservable(self.scheme, [hp.copy() for hp in self.per_group])


def build_groups(n_qubits: int, k_local: int) -> GroupingScheme:
    """Cyclic contiguous windows, one starting at each qubit."""
    if not 1 <= k_local <= n_qubits:
        raise ConfigurationError(
            f"k_local must be in [1, n_qubits={n_qubits}], got {k_local}"
        )
    groups = [
        tuple((g + j) % n_qubits for j in range(k_local))
        for g in range(n_qubits)
    ]
    return GroupingScheme(n_qubits, k_local, groups)


def materialize(hp: HermitianParams) -> np.ndarray:
    """Dense Hermitian matrix: H[i][j] = a_ij + i*b_ij for i<j."""
    dim = hp.dim
    mat = np.zeros((dim, dim), dtype=np.complex128)
    iu = np.triu_indices(dim, 1)
    upper = hp.upper_re + 1j * hp.upper_im
    mat[iu] = upper
    mat += mat.conj().T
    mat[np.diag_indices(dim)] = hp.diag
    return mat


def random_params(
    k_local: int, rng: np.random.Generator, diag_scale: float = 0.1, off_scale: float = 0.05
) -> HermitianParams:
    """Small random spectrum init; keeps early value estimates near zero."""
    dim = 1 << k_local
    m = triangle_size(dim)
    return HermitianParams(
        k_local,
        rng.normal(0.0, diag_scale, dim),
        rng.normal(0.0, off_scale, m),
        rng.normal(0.0, off_scale, m),
    )


def pauli_z_params(k_local: int = 1) -> HermitianParams:
    """Fixed Z^{(x)k} observable expressed in this parameterization."""
    dim = 1 << k_local
    diag = np.array(
        [(-1.0) ** bin(i).count("1") for i in range(dim)], dtype=np.float64
    )
    m = triangle_size(dim)
    return HermitianParams(k_local, diag, np.zeros(m), np.zeros(m))


def expectation(
    sv: StateVector, group: Sequence[int], hp: HermitianParams
) -> float:
    """Tr(rho_group H), guaranteed real for Hermitian H."""
    if len(list(group)) != hp.k_local:
        raise ConfigurationError(
            f"group size {len(list(group))} != k_local {hp.k_local}"
        )
    rho = qstate.reduced_density(sv, group).entries
    return float(np.einsum("ij,ji->", rho, materialize(hp)).real)


def expectation_batch(
    amps: np.ndarray,
    n_qubits: int,
    groups: Sequence[Sequence[int]],
    mats: Sequence[np.ndarray],
) -> np.ndarray:
    """Expectations for a batch of states: shape (B, len(groups))."""
    cols = []
    for group, mat in zip(groups, mats):
        rho = qstate.reduced_density_batch(amps, n_qubits, group)
        cols.append(np.einsum("bij,ji->b", rho, mat).real)
    return np.stack(cols, axis=1)


@lru_cache(maxsize=16)
def _triu_cache(dim: int):
    return np.triu_indices(dim, 1)


def grad_from_density(rho: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """phi-gradient of Tr(rho H(phi)): (d_diag, d_upper_re, d_upper_im).

    The expectation is linear in phi: d/dc_ii = Re rho_ii,
    d/da_ij = 2 Re rho_ij and d/db_ij = 2 Im rho_ij for i<j.
    """
    iu = _triu_cache(rho.shape[-1])
    off = rho[..., iu[0], iu[1]]
    return (
        np.real(np.diagonal(rho, axis1=-2, axis2=-1)).copy(),
        2.0 * off.real,
        2.0 * off.imag,
    )


def expectation_grad_phi(
    sv: StateVector, group: Sequence[int], hp: HermitianParams
) -> HermitianParams:
    """Gradient of ``expectation`` in each phi coordinate, same layout."""
    if len(list(group)) != hp.k_local:
        raise ConfigurationError(
            f"group size {len(list(group))} != k_local {hp.k_local}"
        )
    rho = qstate.reduced_density(sv, group).entries
    d_diag, d_re, d_im = grad_from_density(rho)
    return HermitianParams(hp.k_local, d_diag, d_re, d_im)


# ---------------------------------------------------------------------------
# Eigen-spectrum via cyclic Jacobi on the real-symmetric embedding.
# ---------------------------------------------------------------------------

_JACOBI_MAX_SWEEPS = 100
_JACOBI_TOL = 1e-12


def _jacobi_eigvals(mat: np.ndarray) -> np.ndarray:
    """Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations."""
    a = mat.astype(np.float64).copy()
    n = a.shape[0]
    scale = max(1.0, np.linalg.norm(a))
    for _ in range(_JACOBI_MAX_SWEEPS):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off <= _JACOBI_TOL * scale:
            return np.sort(np.diag(a))
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= _JACOBI_TOL * scale / n:
                    continue
                diff = a[q, q] - a[p, p]
                if abs(apq) < 1e-36 * abs(diff):
                    t = apq / diff
                else:
                    theta = diff / (2.0 * apq)
                    t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot_p = a[p, :].copy()
                rot_q = a[q, :].copy()
                a[p, :] = c * rot_p - s * rot_q
                a[q, :] = s * rot_p + c * rot_q
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
    raise NumericError("Jacobi eigensolver failed to converge")


def spectrum(hp: HermitianParams) -> np.ndarray:
    """Ascending eigenvalues of the materialized Hermitian matrix.

    Uses cyclic Jacobi on the 2K x 2K real embedding [[A, -B], [B, A]] of
    H = A + iB; each eigenvalue of H appears twice in the embedding.
    """
    if hp.dim > 64:
        raise ConfigurationError("spectrum supports matrices up to 64x64")
    mat = materialize(hp)
    a = mat.real
    b = mat.imag
    emb = np.block([[a, -b], [b, a]])
    doubled = _jacobi_eigvals(emb)
    return doubled[::2]
