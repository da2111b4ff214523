"""Dense state-vector oracle for n <= 5 qubits (qubit 0 = least significant)."""

import numpy as np

from artifact.pauli import PauliOperator

I2 = np.eye(2, dtype=complex)
_1Q = {
    "I": I2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1, -1]).astype(complex),
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "S": np.diag([1, 1j]),
    "SDG": np.diag([1, -1j]),
}


def op_on(n, mats: dict[int, np.ndarray]) -> np.ndarray:
    out = np.array([[1]], dtype=complex)
    for q in reversed(range(n)):
        out = np.kron(out, mats.get(q, I2))
    return out


def gate_matrix(n, name, qubits):
    if name in _1Q:
        return op_on(n, {qubits[0]: _1Q[name]})
    dim = 1 << n
    U = np.zeros((dim, dim), dtype=complex)
    a, b = qubits
    for s in range(dim):
        ba, bb = (s >> a) & 1, (s >> b) & 1
        if name == "CNOT":
            t = s ^ (ba << b)
            U[t, s] = 1
        elif name == "CZ":
            U[s, s] = -1 if ba and bb else 1
        elif name == "SWAP":
            t = s
            if ba != bb:
                t ^= (1 << a) | (1 << b)
            U[t, s] = 1
    return U


def pauli_matrix(p: PauliOperator) -> np.ndarray:
    mats = {}
    for q in range(p.n):
        mats[q] = _1Q[p.letter(q)]
    return p.phase * op_on(p.n, mats)


def projector_from_stabilizers(stabs) -> np.ndarray:
    n = stabs[0].n
    P = np.eye(1 << n, dtype=complex)
    for g in stabs:
        P = P @ (np.eye(1 << n) + pauli_matrix(g)) / 2
    return P


def measure_dense(psi, n, q, bit):
    mask = np.array([((s >> q) & 1) == bit for s in range(1 << n)])
    out = psi * mask
    prob = float(np.vdot(out, out).real)
    return out / np.sqrt(prob) if prob > 1e-12 else None, prob
