"""Randomized Pauli-basis measurements and the estimators built on them.

A snapshot stores one byte per qubit, code = 2*basis + bit with basis
X=0, Y=1, Z=2, so codes run over {0,...,5}. Measuring in basis P and
reading bit b corresponds to the single-qubit shadow 3 U'|b><b|U - I,
whose trace against P is 3*(1-2b) when the bases match and 0 otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .groundstate import PhaseLabel, phase_label_from_scores, sublattice_sites
from .paulis import PauliString, StateVector
from .rng import as_generator

BASIS_CHARS = "XYZ"

_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2.0)
_HSdag = _H @ np.diag([1.0, -1.0j])
_ROTATIONS = {0: _H, 1: _HSdag, 2: np.eye(2, dtype=np.complex128)}


def encode_snapshot(basis_index: int, bit: int) -> int:
    return 2 * basis_index + bit


def decode_snapshot(code: int) -> tuple[int, int]:
    if not 0 <= code <= 5:
        raise ValueError(f"snapshot code {code} out of range")
    return code >> 1, code & 1


@dataclass(frozen=True)
class ShadowSet:
    """M snapshots of N qubits; ``codes`` is an (M, N) uint8 array."""

    codes: np.ndarray

    def __post_init__(self):
        codes = np.asarray(self.codes, dtype=np.uint8)
        if codes.ndim != 2 or codes.shape[0] < 1:
            raise ValueError("codes must be a non-empty (M, N) array")
        if codes.max(initial=0) > 5:
            raise ValueError("snapshot codes must lie in {0,...,5}")
        object.__setattr__(self, "codes", codes)
        codes.setflags(write=False)

    @property
    def nsnapshots(self) -> int:
        return self.codes.shape[0]

    @property
    def nqubits(self) -> int:
        return self.codes.shape[1]

    def prefix(self, m: int) -> "ShadowSet":
        """First m snapshots (snapshots are i.i.d., so a prefix is a valid set)."""
        if not 1 <= m <= self.nsnapshots:
            raise ValueError(f"cannot take {m} of {self.nsnapshots} snapshots")
        return ShadowSet(self.codes[:m])


@dataclass(frozen=True)
class BitstringSet:
    """M computational-basis outcomes of N qubits; ``bits`` is (M, N) in {0, 1}."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.uint8)
        if bits.ndim != 2 or bits.shape[0] < 1:
            raise ValueError("bits must be a non-empty (M, N) array")
        if bits.max(initial=0) > 1:
            raise ValueError("bits must be 0 or 1")
        object.__setattr__(self, "bits", bits)
        bits.setflags(write=False)

    @property
    def nsnapshots(self) -> int:
        return self.bits.shape[0]

    @property
    def nqubits(self) -> int:
        return self.bits.shape[1]

    def prefix(self, m: int) -> "BitstringSet":
        if not 1 <= m <= self.nsnapshots:
            raise ValueError(f"cannot take {m} of {self.nsnapshots} snapshots")
        return BitstringSet(self.bits[:m])


def _apply_single_qubit(amps: np.ndarray, gate: np.ndarray, bit: int, nqubits: int) -> np.ndarray:
    """Apply a 2x2 gate on the qubit stored at bit position ``bit``."""
    # index = (high << (bit+1)) | (b << bit) | low
    shaped = amps.reshape(2 ** (nqubits - bit - 1), 2, 2**bit)
    return np.einsum("ab,hbl->hal", gate, shaped).reshape(-1)


def _rotated_probabilities(state: StateVector, bases: np.ndarray) -> np.ndarray:
    """Born probabilities after rotating each qubit into its measurement basis."""
    amps = state.amplitudes
    n = state.nqubits
    for site in range(n):
        b = int(bases[site])
        if b != 2:
            amps = _apply_single_qubit(amps, _ROTATIONS[b], site, n)
    return np.abs(amps) ** 2


def sample_shadow(state: StateVector, M: int, rng) -> ShadowSet:
    """Draw M snapshots: per qubit a uniform basis in {X, Y, Z}, then one
    bitstring from the rotated state's Born distribution.

    Snapshots sharing a basis assignment share the rotation work; each
    outcome depends only on (its basis row, its own uniform draw), so the
    result is independent of the grouping.
    """
    if M < 1:
        raise ValueError("need at least one snapshot")
    rng = as_generator(rng)
    n = state.nqubits
    bases = rng.integers(0, 3, size=(M, n), dtype=np.uint8)
    draws = rng.random(M)
    outcomes = np.empty(M, dtype=np.int64)
    unique, inverse = np.unique(bases, axis=0, return_inverse=True)
    for g in range(unique.shape[0]):
        members = np.nonzero(inverse == g)[0]
        probs = _rotated_probabilities(state, unique[g])
        cdf = np.cumsum(probs)
        cdf[-1] = 1.0
        outcomes[members] = np.searchsorted(cdf, draws[members], side="right")
    bits = (outcomes[:, None] >> np.arange(n)[None, :]) & 1
    return ShadowSet((2 * bases + bits).astype(np.uint8))


def sample_zbasis(state: StateVector, M: int, rng) -> BitstringSet:
    """Draw M computational-basis bitstrings from |psi|^2."""
    if M < 1:
        raise ValueError("need at least one snapshot")
    rng = as_generator(rng)
    n = state.nqubits
    probs = np.abs(state.amplitudes) ** 2
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    outcomes = np.searchsorted(cdf, rng.random(M), side="right")
    bits = (outcomes[:, None] >> np.arange(n)[None, :]) & 1
    return BitstringSet(bits.astype(np.uint8))


def _factor_table(pauli_char: str) -> np.ndarray:
    """Per-code estimator factor tr((3|v><v| - I) P) for a single qubit."""
    if pauli_char == "I":
        return np.ones(6)
    basis = BASIS_CHARS.index(pauli_char)
    table = np.zeros(6)
    table[2 * basis] = 3.0
    table[2 * basis + 1] = -3.0
    return table


def shadow_expectation(shadows: ShadowSet, ps: PauliString) -> float:
    """Mean over snapshots of the per-qubit factor product.

    Each snapshot contributes 0 or +-3^weight; the mean is an unbiased
    estimate of <P>.
    """
    if ps.nqubits != shadows.nqubits:
        raise ValueError(
            f"string on {ps.nqubits} qubits, shadows on {shadows.nqubits}"
        )
    prod = np.ones(shadows.nsnapshots)
    for site, ch in enumerate(ps.ops):
        if ch != "I":
            prod *= _factor_table(ch)[shadows.codes[:, site]]
    return float(prod.mean())


def shadow_correlation(shadows: ShadowSet) -> np.ndarray:
    """Estimated correlation matrix; diagonal fixed to 1, off-diagonal entries
    are means of the three two-point estimators and are deliberately not
    clipped to [-1, 1] (clipping would bias downstream regressions)."""
    codes = shadows.codes
    M, n = codes.shape
    acc = np.zeros((n, n))
    for ch in BASIS_CHARS:
        f = _factor_table(ch)[codes]  # (M, n)
        acc += f.T @ f
    C = acc / (3.0 * M)
    np.fill_diagonal(C, 1.0)
    return C


# tr(sigma_a sigma_b) for single-qubit shadows with codes a, b:
# 9|<v_a|v_b>|^2 - 4 -> 5 same basis & bit, -4 same basis opposite bit,
# 1/2 different bases.
_PAIR_TRACE = np.full((6, 6), 0.5)
for _a in range(6):
    _PAIR_TRACE[_a, _a] = 5.0
    _PAIR_TRACE[_a, _a ^ 1] = -4.0


def shadow_renyi2(shadows: ShadowSet, pair: tuple[int, int]) -> float:
    """Renyi-2 entropy estimate for an adjacent pair from a U-statistic.

    The purity estimate averages tr(rho_t rho_t') over ordered snapshot
    pairs t != t', then is clamped to the physical range [1/4, 1] before
    taking -log2 (small-M estimates can leave it).
    """
    i, j = pair
    if j != i + 1:
        raise ValueError(f"expected an adjacent pair, got {pair}")
    if not 1 <= i <= shadows.nqubits - 1:
        raise ValueError(f"pair {pair} out of range for N={shadows.nqubits}")
    M = shadows.nsnapshots
    if M < 2:
        raise ValueError("purity U-statistic needs at least 2 snapshots")
    joint = shadows.codes[:, i - 1].astype(np.intp) * 6 + shadows.codes[:, j - 1]
    W = np.bincount(joint, minlength=36).reshape(6, 6).astype(np.float64)
    full = float(np.einsum("ab,ac,bd,cd->", W, _PAIR_TRACE, _PAIR_TRACE, W))
    diag = 25.0 * M  # t = t' term: both factors are 5
    purity = (full - diag) / (M * (M - 1))
    return float(-np.log2(min(max(purity, 0.25), 1.0)))


def estimate_phase_scores(bits: BitstringSet) -> tuple[float, float, PhaseLabel]:
    """Empirical sublattice occupations and the resulting threshold label."""
    occ = 1.0 - bits.bits.mean(axis=0)
    n = bits.nqubits
    s2 = float(np.mean([occ[s - 1] for s in sublattice_sites(n, 2)]))
    s3 = float(np.mean([occ[s - 1] for s in sublattice_sites(n, 3)]))
    return s2, s3, phase_label_from_scores(s2, s3)
