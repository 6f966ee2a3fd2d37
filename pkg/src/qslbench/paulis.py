"""Pauli-string algebra acting on dense state vectors.

Operators are sums of Pauli strings with real coefficients and are applied
by bit manipulation, never by materializing the 2^N x 2^N matrix. Site
indexing is 1-based in all public interfaces; site k is stored on bit k-1
of the amplitude index (site 1 = least significant bit), so the basis state
|b_1 b_2 ... b_N> lives at index sum_k b_k 2^(k-1).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

PAULI_CHARS = "IXYZ"

# amplitude-count threshold above which per-term gather tables are not cached
_COMPILE_MAX_BYTES = 64 * 2**20


@lru_cache(maxsize=8)
def _parity_signs(nqubits: int) -> np.ndarray:
    """(-1)^popcount(m) for every index m < 2^nqubits, as int8."""
    signs = np.ones(1, dtype=np.int8)
    for _ in range(nqubits):
        signs = np.concatenate([signs, -signs])
    return signs


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-site operators from {I, X, Y, Z}.

    ``ops`` holds one letter per site, site 1 first.
    """

    ops: str

    def __post_init__(self):
        if not self.ops:
            raise ValueError("Pauli string must act on at least one site")
        for pos, ch in enumerate(self.ops, start=1):
            if ch not in PAULI_CHARS:
                raise ValueError(
                    f"invalid Pauli symbol {ch!r} at position {pos} (expected one of I, X, Y, Z)"
                )

    @property
    def nqubits(self) -> int:
        return len(self.ops)

    @property
    def weight(self) -> int:
        """Number of non-identity sites."""
        return sum(ch != "I" for ch in self.ops)

    @property
    def flip_mask(self) -> int:
        """Bit mask of sites whose computational bit is flipped (X and Y)."""
        return _masks(self.ops)[0]

    @property
    def phase_mask(self) -> int:
        """Bit mask of sites contributing a (-1)^bit phase (Y and Z)."""
        return _masks(self.ops)[1]

    @property
    def ny(self) -> int:
        return self.ops.count("Y")

    def __str__(self) -> str:
        return self.ops


@lru_cache(maxsize=4096)
def _masks(ops: str) -> tuple[int, int]:
    flip = 0
    phase = 0
    for k, ch in enumerate(ops):
        if ch in "XY":
            flip |= 1 << k
        if ch in "YZ":
            phase |= 1 << k
    return flip, phase


def parse_pauli(text: str) -> PauliString:
    """Parse a plain letter string such as "XIZ" (site 1 = leftmost character)."""
    if not isinstance(text, str):
        raise TypeError(f"expected str, got {type(text).__name__}")
    return PauliString(text)


def identity_string(nqubits: int) -> PauliString:
    return PauliString("I" * nqubits)


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state on ``nqubits`` qubits (2^N complex amplitudes)."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 1 or amps.size == 0 or amps.size & (amps.size - 1):
            raise ValueError("amplitude vector length must be a power of two")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"state not normalized: ||amps||={norm!r}")
        object.__setattr__(self, "amplitudes", amps)
        amps.setflags(write=False)

    @property
    def nqubits(self) -> int:
        return int(self.amplitudes.size).bit_length() - 1

    @classmethod
    def computational(cls, bits: Sequence[int]) -> "StateVector":
        """Basis state |b_1 b_2 ... b_N> from a bit sequence (site 1 first)."""
        index = 0
        for k, b in enumerate(bits):
            if b not in (0, 1):
                raise ValueError("bits must be 0 or 1")
            index |= b << k
        amps = np.zeros(2 ** len(bits), dtype=np.complex128)
        amps[index] = 1.0
        return cls(amps)

    @classmethod
    def from_unnormalized(cls, amps: np.ndarray) -> "StateVector":
        amps = np.asarray(amps, dtype=np.complex128)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(amps / norm)


class SparseOperator:
    """Real-coefficient sum of Pauli strings on a fixed number of qubits.

    Terms are canonicalized on construction: duplicates are merged by
    summing coefficients, so no two terms share a Pauli string.
    """

    __slots__ = ("terms", "nqubits")

    def __init__(self, terms: Iterable[tuple[float, PauliString]], nqubits: int):
        merged: dict[str, float] = {}
        order: list[str] = []
        for coeff, ps in terms:
            if isinstance(coeff, complex):
                raise TypeError("coefficients must be real")
            c = float(coeff)
            if not np.isfinite(c):
                raise ValueError(f"non-finite coefficient {coeff!r}")
            if ps.nqubits != nqubits:
                raise ValueError(
                    f"term {ps} acts on {ps.nqubits} qubits, operator has {nqubits}"
                )
            if ps.ops not in merged:
                order.append(ps.ops)
                merged[ps.ops] = c
            else:
                merged[ps.ops] += c
        self.terms: tuple[tuple[float, PauliString], ...] = tuple(
            (merged[ops], PauliString(ops)) for ops in order
        )
        self.nqubits = int(nqubits)

    @classmethod
    def from_strings(cls, terms: Iterable[tuple[float, str]], nqubits: int) -> "SparseOperator":
        return cls([(c, PauliString(s)) for c, s in terms], nqubits)

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def is_real_matrix(self) -> bool:
        """True when every term is a real matrix (even number of Y sites)."""
        return all(ps.ny % 2 == 0 for _, ps in self.terms)

    def serialize(self) -> str:
        """One line per term: "coeff<TAB>string"."""
        return "\n".join(f"{coeff!r}\t{ps.ops}" for coeff, ps in self.terms)

    @classmethod
    def deserialize(cls, text: str) -> "SparseOperator":
        terms = []
        nqubits = None
        for line in text.strip().splitlines():
            coeff_s, ops = line.split("\t")
            terms.append((float(coeff_s), PauliString(ops)))
            nqubits = len(ops)
        if nqubits is None:
            raise ValueError("empty operator text")
        return cls(terms, nqubits)


def _term_action(ps: PauliString, amplitudes: np.ndarray) -> np.ndarray:
    """Return G|psi> for a single Pauli string, up to the global i^ny factor.

    The caller multiplies by 1j**ps.ny; splitting the factor out keeps the
    hot path in real arithmetic for real operators.
    """
    n = ps.nqubits
    src = np.arange(amplitudes.size) ^ ps.flip_mask
    out = amplitudes[src]
    if ps.phase_mask:
        out = out * _parity_signs(n)[src & ps.phase_mask]
    return out


def apply_operator(op: SparseOperator, state: StateVector) -> np.ndarray:
    """Compute (sum_k c_k G_k)|psi> term by term; returns an unnormalized vector."""
    amps = state.amplitudes
    if amps.size != 2**op.nqubits:
        raise ValueError(
            f"dimension mismatch: operator on {op.nqubits} qubits, state on {state.nqubits}"
        )
    out = np.zeros_like(amps)
    for coeff, ps in op.terms:
        out += (coeff * 1j**ps.ny) * _term_action(ps, amps)
    return out


def expectation(state: StateVector, ps: PauliString) -> float:
    """<psi|P|psi> for a single Pauli string; the imaginary part must vanish."""
    amps = state.amplitudes
    if amps.size != 2**ps.nqubits:
        raise ValueError(
            f"dimension mismatch: string on {ps.nqubits} qubits, state on {state.nqubits}"
        )
    val = 1j**ps.ny * np.vdot(amps, _term_action(ps, amps))
    assert abs(val.imag) <= 1e-9, f"expectation has imaginary part {val.imag}"
    return float(val.real)


def operator_expectation(state: StateVector, op: SparseOperator) -> float:
    """<psi|H|psi> for a Pauli-sum operator."""
    amps = state.amplitudes
    return float(np.vdot(amps, apply_operator(op, state)).real)


class CompiledOperator:
    """Matrix-vector action of a SparseOperator via grouped gather tables.

    Terms sharing a flip mask are combined into one weight row (in
    particular every purely diagonal term lands in a single row), so the
    per-matvec cost is O(groups * 2^N) rather than O(terms * 2^N). For real
    operators the action maps real vectors to real vectors. Falls back to
    mask arithmetic per term when the tables would be too large. The
    reduction order is fixed, so results are reproducible.
    """

    def __init__(self, op: SparseOperator):
        self.nqubits = op.nqubits
        self.dim = 2**op.nqubits
        self.is_real = op.is_real_matrix
        self._op = op
        flips = sorted({ps.flip_mask for _, ps in op.terms})
        nbytes = len(flips) * self.dim * (8 + 16)
        self._tables = None
        if op.terms and nbytes <= _COMPILE_MAX_BYTES:
            idx = np.arange(self.dim)
            src = np.empty((len(flips), self.dim), dtype=np.intp)
            wts = np.zeros((len(flips), self.dim), dtype=np.complex128)
            row = {f: g for g, f in enumerate(flips)}
            for g, f in enumerate(flips):
                src[g] = idx ^ f
            for coeff, ps in op.terms:
                g = row[ps.flip_mask]
                w = np.full(self.dim, coeff * 1j**ps.ny, dtype=np.complex128)
                if ps.phase_mask:
                    w *= _parity_signs(op.nqubits)[src[g] & ps.phase_mask]
                wts[g] += w
            if self.is_real:
                wts = np.ascontiguousarray(wts.real)
            self._tables = (src, wts)

    def matvec(self, vec: np.ndarray) -> np.ndarray:
        if self._tables is not None:
            src, wts = self._tables
            return np.einsum("tk,tk->k", wts, vec[src])
        base = np.float64 if self.is_real else np.complex128
        out = np.zeros(self.dim, dtype=np.result_type(base, vec.dtype))
        for coeff, ps in self._op.terms:
            factor = coeff * 1j**ps.ny
            if self.is_real:
                factor = factor.real
            out += factor * _term_action(ps, vec)
        return out
