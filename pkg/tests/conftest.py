"""Shared test oracles: dense-matrix circuit evaluation.

Everything here is built from explicit Kronecker products and
permutation matrices, independently of the package's strided kernels, so
it can serve as a brute-force reference for forward passes and
expectation values.
"""

import numpy as np

from anorl import qmodel

I2 = np.eye(2, dtype=np.complex128)
H_GATE = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)


def rx(angle):
    return np.cos(angle / 2) * I2 - 1j * np.sin(angle / 2) * PAULI_X


def ry(angle):
    return np.cos(angle / 2) * I2 - 1j * np.sin(angle / 2) * PAULI_Y


def rz(angle):
    return np.cos(angle / 2) * I2 - 1j * np.sin(angle / 2) * PAULI_Z


def op_on(u, qubit, n):
    """Embed a 1-qubit operator; qubit 0 is the most significant bit."""
    return np.kron(np.kron(np.eye(1 << qubit), u), np.eye(1 << (n - qubit - 1)))


def cnot_on(control, target, n):
    dim = 1 << n
    mat = np.zeros((dim, dim), dtype=np.complex128)
    for i in range(dim):
        if (i >> (n - 1 - control)) & 1:
            j = i ^ (1 << (n - 1 - target))
        else:
            j = i
        mat[j, i] = 1.0
    return mat


def permutation_to(qubits, n):
    """P mapping the standard basis order to (qubits..., rest...) order."""
    rest = [q for q in range(n) if q not in qubits]
    order = list(qubits) + rest
    dim = 1 << n
    mat = np.zeros((dim, dim))
    for i in range(dim):
        bits = [(i >> (n - 1 - q)) & 1 for q in range(n)]
        j = 0
        for q in order:
            j = (j << 1) | bits[q]
        mat[j, i] = 1.0
    return mat


def embed(mat, qubits, n):
    """Dense 2^n operator acting as ``mat`` on the given ordered qubits."""
    k = len(qubits)
    perm = permutation_to(qubits, n)
    big = np.kron(mat, np.eye(1 << (n - k)))
    return perm.T @ big @ perm


def dense_state(config, theta, features):
    """Encoded and evolved state via explicit matrix products."""
    n = config.n_qubits
    psi = np.zeros(1 << n, dtype=np.complex128)
    psi[0] = 1.0
    for q in range(n):
        psi = op_on(H_GATE, q, n) @ psi
    for q in range(n):
        psi = op_on(ry(features[q]), q, n) @ psi
    theta = np.asarray(theta, dtype=np.float64)
    for layer in range(config.effective_layers):
        for control, target in qmodel.entangler_pairs(n):
            psi = cnot_on(control, target, n) @ psi
        for q in range(n):
            a = theta[layer, q]
            psi = op_on(rz(a[2]) @ ry(a[1]) @ rx(a[0]), q, n) @ psi
    return psi


def dense_forward(config, theta, mats, features, groups=None):
    """Brute-force logits: <psi| embed(H_g) |psi> per readout operator."""
    n = config.n_qubits
    psi = dense_state(config, theta, features)
    if mats is None:
        return np.array(
            [
                np.real(psi.conj() @ embed(PAULI_Z, [q], n) @ psi)
                for q in range(config.n_outputs)
            ]
        )
    from anorl.observable import build_groups

    if groups is None:
        groups = build_groups(n, config.locality).groups[: config.n_outputs]
    return np.array(
        [
            np.real(psi.conj() @ embed(mat, list(g), n) @ psi)
            for g, mat in zip(groups, mats)
        ]
    )
