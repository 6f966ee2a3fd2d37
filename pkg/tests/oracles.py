"""Independent reference implementations used only by tests.

Everything here is built from dense Kronecker products or exhaustive
enumeration and deliberately shares no code with the package's bit-mask
machinery.
"""

import itertools

import numpy as np

PAULI_MATS = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


def pauli_string_matrix(ops: str) -> np.ndarray:
    """Dense matrix of a Pauli string; site 1 occupies the least significant bit."""
    mat = np.eye(1, dtype=np.complex128)
    for ch in ops:  # later (kron-left) factors are more significant
        mat = np.kron(PAULI_MATS[ch], mat)
    return mat


def operator_matrix(op) -> np.ndarray:
    """Dense matrix of a SparseOperator via Kronecker products."""
    dim = 2**op.nqubits
    mat = np.zeros((dim, dim), dtype=np.complex128)
    for coeff, ps in op.terms:
        mat += coeff * pauli_string_matrix(ps.ops)
    return mat


def random_state(rng, nqubits: int) -> np.ndarray:
    amps = rng.standard_normal(2**nqubits) + 1j * rng.standard_normal(2**nqubits)
    return amps / np.linalg.norm(amps)


_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
_ROT = {0: _H, 1: _H @ np.diag([1.0, -1.0j]), 2: np.eye(2, dtype=np.complex128)}


def rotation_matrix(bases) -> np.ndarray:
    """Product rotation for a per-site basis assignment (site 1 = LSB)."""
    mat = np.eye(1, dtype=np.complex128)
    for b in bases:
        mat = np.kron(_ROT[int(b)], mat)
    return mat


def enumerate_shadow_distribution(amps: np.ndarray):
    """Yield (probability, codes_row) over every (basis assignment, outcome).

    Probabilities include the uniform 1/3^N basis weight, so they sum to 1.
    """
    n = int(np.log2(amps.size))
    for bases in itertools.product(range(3), repeat=n):
        rotated = rotation_matrix(bases) @ amps
        probs = np.abs(rotated) ** 2
        for outcome in range(amps.size):
            p = probs[outcome] / 3**n
            if p == 0.0:
                continue
            bits = [(outcome >> k) & 1 for k in range(n)]
            codes = [2 * bases[k] + bits[k] for k in range(n)]
            yield p, codes


def partial_trace_pair(amps: np.ndarray, site: int, nqubits: int) -> np.ndarray:
    """4x4 reduced density matrix of sites (site, site+1) by explicit summation."""
    rho = np.outer(amps, amps.conj())
    keep = [site - 1, site]  # bit positions
    others = [k for k in range(nqubits) if k not in keep]
    out = np.zeros((4, 4), dtype=np.complex128)
    for a0 in range(2):
        for a1 in range(2):
            for b0 in range(2):
                for b1 in range(2):
                    row = a0 | (a1 << 1)
                    col = b0 | (b1 << 1)
                    total = 0.0
                    for rest_bits in itertools.product(range(2), repeat=len(others)):
                        i = (a0 << keep[0]) | (a1 << keep[1])
                        j = (b0 << keep[0]) | (b1 << keep[1])
                        for pos, bit in zip(others, rest_bits):
                            i |= bit << pos
                            j |= bit << pos
                        total += rho[i, j]
                    out[row, col] = total
    return out
