"""The three spin-chain families and their parameter distributions.

Heisenberg chains use power-law couplings J_ij = 369/|i-j|^a with a drawn
uniformly from (1, 2); transverse-field Ising chains draw J_i from U[0, 2]
with unit fields h_i = 1; Rydberg chains draw the blockade ratio R_b/a from
U[1, 2.95] and the detuning from U[-20pi, 30pi] at fixed Rabi frequency
Omega = 10pi. Occupation operators are (I + Z_i)/2, so bit 0 (Z = +1) means
an occupied site.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .paulis import PauliString, SparseOperator
from .rng import as_generator

HB_COUPLING_SCALE = 369.0
RYDBERG_OMEGA = 10.0 * math.pi

FAMILIES = ("heisenberg", "tfim", "rydberg")


def _one_site(n: int, site: int, ch: str) -> PauliString:
    ops = ["I"] * n
    ops[site - 1] = ch
    return PauliString("".join(ops))


def _two_site(n: int, i: int, j: int, ch: str) -> PauliString:
    ops = ["I"] * n
    ops[i - 1] = ch
    ops[j - 1] = ch
    return PauliString("".join(ops))


@dataclass(frozen=True)
class HBParams:
    """All-to-all Heisenberg couplings; ``couplings[i-1, j-1]`` is J_ij."""

    nqubits: int
    exponent: float
    couplings: np.ndarray

    def __post_init__(self):
        J = np.asarray(self.couplings, dtype=np.float64)
        if J.shape != (self.nqubits, self.nqubits):
            raise ValueError("coupling matrix shape must be (N, N)")
        if not np.allclose(J, J.T):
            raise ValueError("coupling matrix must be symmetric")
        object.__setattr__(self, "couplings", J)
        J.setflags(write=False)

    @classmethod
    def from_exponent(cls, nqubits: int, exponent: float) -> "HBParams":
        """Power-law couplings J_ij = 369 / |i-j|^exponent."""
        idx = np.arange(nqubits)
        dist = np.abs(idx[:, None] - idx[None, :]).astype(np.float64)
        with np.errstate(divide="ignore"):
            J = HB_COUPLING_SCALE / dist**exponent
        np.fill_diagonal(J, 0.0)
        return cls(nqubits, float(exponent), J)


@dataclass(frozen=True)
class TFIMParams:
    nqubits: int
    couplings: np.ndarray  # J_i, length N-1
    fields: np.ndarray  # h_i, length N

    def __post_init__(self):
        J = np.asarray(self.couplings, dtype=np.float64)
        h = np.asarray(self.fields, dtype=np.float64)
        if J.shape != (self.nqubits - 1,):
            raise ValueError(f"expected {self.nqubits - 1} couplings, got {J.shape}")
        if h.shape != (self.nqubits,):
            raise ValueError(f"expected {self.nqubits} fields, got {h.shape}")
        object.__setattr__(self, "couplings", J)
        object.__setattr__(self, "fields", h)
        J.setflags(write=False)
        h.setflags(write=False)


@dataclass(frozen=True)
class RydbergParams:
    nqubits: int
    omega: float  # Rabi frequency (rad/time)
    rb_over_a: float  # blockade radius over lattice spacing
    delta: float  # detuning (rad/time), uniform across sites


def build_heisenberg(p: HBParams) -> SparseOperator:
    """sum_{i<j} J_ij (X_i X_j + Y_i Y_j + Z_i Z_j); 3·N(N-1)/2 terms."""
    n = p.nqubits
    if n < 2:
        raise ValueError("need at least 2 qubits")
    terms = []
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            J = float(p.couplings[i - 1, j - 1])
            for ch in "XYZ":
                terms.append((J, _two_site(n, i, j, ch)))
    return SparseOperator(terms, n)


def build_tfim(p: TFIMParams) -> SparseOperator:
    """-sum_i J_i Z_i Z_{i+1} - sum_i h_i X_i; 2N-1 terms."""
    n = p.nqubits
    if n < 2:
        raise ValueError("need at least 2 qubits")
    terms = []
    for i in range(1, n):
        terms.append((-float(p.couplings[i - 1]), _two_site(n, i, i + 1, "Z")))
    for i in range(1, n + 1):
        terms.append((-float(p.fields[i - 1]), _one_site(n, i, "X")))
    return SparseOperator(terms, n)


def build_rydberg(p: RydbergParams) -> SparseOperator:
    """Blockade interactions between occupation operators plus drive and detuning.

    N_i N_j expands into (II + Z_i + Z_j + Z_i Z_j)/4; identity terms are
    kept so eigenvalues match the written Hamiltonian.
    """
    n = p.nqubits
    if n < 2:
        raise ValueError("need at least 2 qubits")
    terms: list[tuple[float, PauliString]] = []
    identity = PauliString("I" * n)
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            v = p.omega * p.rb_over_a**6 / abs(i - j) ** 6
            terms.append((v / 4.0, identity))
            terms.append((v / 4.0, _one_site(n, i, "Z")))
            terms.append((v / 4.0, _one_site(n, j, "Z")))
            terms.append((v / 4.0, _two_site(n, i, j, "Z")))
    for i in range(1, n + 1):
        terms.append((p.omega / 2.0, _one_site(n, i, "X")))
        # -delta * N_i = -delta/2 (I + Z_i)
        terms.append((-p.delta / 2.0, identity))
        terms.append((-p.delta / 2.0, _one_site(n, i, "Z")))
    return SparseOperator(terms, n)


def build_hamiltonian(params) -> SparseOperator:
    if isinstance(params, HBParams):
        return build_heisenberg(params)
    if isinstance(params, TFIMParams):
        return build_tfim(params)
    if isinstance(params, RydbergParams):
        return build_rydberg(params)
    raise TypeError(f"unknown parameter type {type(params).__name__}")


def sample_params(family: str, nqubits: int, rng):
    """Draw one parameter set for the given family; pure in (family, N, seed)."""
    if nqubits < 2:
        raise ValueError("need at least 2 qubits")
    rng = as_generator(rng)
    if family == "heisenberg":
        a = rng.uniform(1.0, 2.0)
        return HBParams.from_exponent(nqubits, a)
    if family == "tfim":
        J = rng.uniform(0.0, 2.0, size=nqubits - 1)
        return TFIMParams(nqubits, J, np.ones(nqubits))
    if family == "rydberg":
        rb = rng.uniform(1.0, 2.95)
        delta = rng.uniform(-20.0 * math.pi, 30.0 * math.pi)
        return RydbergParams(nqubits, RYDBERG_OMEGA, rb, delta)
    raise ValueError(f"unknown family {family!r} (expected one of {FAMILIES})")


def feature_vector(params) -> np.ndarray:
    """Classical input features used by all learners.

    Heisenberg: the N(N-1)/2 upper-triangular couplings. TFIM: the N-1
    couplings. Rydberg: (Omega, R_b/a, Delta) padded with the derived
    nearest-neighbour blockade scale Omega·(R_b/a)^6 to length 4.
    """
    if isinstance(params, HBParams):
        iu = np.triu_indices(params.nqubits, k=1)
        return np.ascontiguousarray(params.couplings[iu])
    if isinstance(params, TFIMParams):
        return np.array(params.couplings)
    if isinstance(params, RydbergParams):
        blockade = params.omega * params.rb_over_a**6
        return np.array([params.omega, params.rb_over_a, params.delta, blockade])
    raise TypeError(f"unknown parameter type {type(params).__name__}")


def family_of(params) -> str:
    return {HBParams: "heisenberg", TFIMParams: "tfim", RydbergParams: "rydberg"}[type(params)]


def params_to_json(params) -> str:
    """JSON round-trip is bit-exact for doubles (repr-based float encoding)."""
    if isinstance(params, HBParams):
        payload = {
            "family": "heisenberg",
            "nqubits": params.nqubits,
            "exponent": params.exponent,
            "couplings": params.couplings.tolist(),
        }
    elif isinstance(params, TFIMParams):
        payload = {
            "family": "tfim",
            "nqubits": params.nqubits,
            "couplings": params.couplings.tolist(),
            "fields": params.fields.tolist(),
        }
    elif isinstance(params, RydbergParams):
        payload = {
            "family": "rydberg",
            "nqubits": params.nqubits,
            "omega": params.omega,
            "rb_over_a": params.rb_over_a,
            "delta": params.delta,
        }
    else:
        raise TypeError(f"unknown parameter type {type(params).__name__}")
    return json.dumps(payload, sort_keys=True)


def params_from_json(text: str):
    payload = json.loads(text)
    family = payload["family"]
    if family == "heisenberg":
        return HBParams(payload["nqubits"], payload["exponent"], np.array(payload["couplings"]))
    if family == "tfim":
        return TFIMParams(payload["nqubits"], np.array(payload["couplings"]), np.array(payload["fields"]))
    if family == "rydberg":
        return RydbergParams(payload["nqubits"], payload["omega"], payload["rb_over_a"], payload["delta"])
    raise ValueError(f"unknown family {family!r}")
