"""Ground states via Lanczos iteration, plus exact property oracles.

The Lanczos solver keeps the full Krylov basis and reorthogonalizes every
step; at the chain lengths this package targets (N <= 20) robustness is
worth the memory. Exact correlations, Renyi-2 entropies and phase labels
are the infinite-measurement references everything else is scored against.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .paulis import CompiledOperator, PauliString, SparseOperator, StateVector, expectation
from .rng import as_generator

MAX_QUBITS = 20
DENSE_MAX_QUBITS = 12
DEGENERACY_GAP = 1e-10


class SolverError(RuntimeError):
    """Lanczos failed to reach the requested residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class GroundState:
    """Lowest eigenpair of a Hamiltonian, with the achieved residual."""

    energy: float
    state: StateVector
    residual: float
    gap: float  # lambda_2 - lambda_1 estimate from the Krylov space
    iterations: int

    @property
    def nqubits(self) -> int:
        return self.state.nqubits


def _reorthogonalize(w: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Orthogonalize w against the rows of Q; repeats the projection once
    when the first pass cancelled most of the norm ("twice is enough")."""
    before = np.linalg.norm(w)
    w = w - Q.T @ (Q.conj() @ w)
    if np.linalg.norm(w) < 0.5 * before:
        w = w - Q.T @ (Q.conj() @ w)
    return w


def _gap_estimate(compiled, x, lam1: float, rng, max_iter: int = 100, rtol: float = 1e-6) -> float:
    """Estimate lambda_2 - lambda_1 by a deflated Lanczos pass.

    A plain Krylov space never resolves eigenvalue multiplicity, so the
    second pass works orthogonally to the converged ground vector. Returns
    early once the running Ritz value drops below the degeneracy threshold
    (Ritz values bound lambda_2 from above, so that exit is sound); the
    non-degenerate answer waits for the Ritz pair to converge.
    """
    dim = compiled.dim
    if dim < 2:
        return np.inf
    v = rng.standard_normal(dim)
    if not compiled.is_real:
        v = v + 1j * rng.standard_normal(dim)
    v = v.astype(x.dtype)
    v -= x * np.vdot(x, v)
    v /= np.linalg.norm(v)
    kmax = min(max_iter, dim - 1)
    Q = np.zeros((kmax + 1, dim), dtype=x.dtype)
    Q[0] = v
    alphas: list[float] = []
    betas: list[float] = []
    theta = np.inf
    for it in range(1, kmax + 1):
        w = compiled.matvec(Q[it - 1])
        alphas.append(float(np.vdot(Q[it - 1], w).real))
        w = _reorthogonalize(w, Q[:it])
        w -= x * np.vdot(x, w)
        beta = float(np.linalg.norm(w))
        evals, evecs = eigh_tridiagonal(alphas, betas, select="i", select_range=(0, 0))
        theta = float(evals[0])
        residual = beta * abs(evecs[-1, 0])
        if theta - lam1 < DEGENERACY_GAP:
            return theta - lam1
        if residual <= rtol or beta < 1e-14:
            break
        betas.append(beta)
        Q[it] = w / beta
    return theta - lam1


def ground_state(
    H: SparseOperator,
    tol: float = 1e-10,
    max_iter: int = 500,
    rng=0,
) -> GroundState:
    """Lowest eigenpair by Lanczos with full reorthogonalization.

    Deterministic given the seed (the start vector is the only randomness).
    Raises SolverError with the best residual on non-convergence. A warning
    is emitted when the deflated estimate of the spectral gap is below
    DEGENERACY_GAP, in which case the returned vector is an arbitrary
    element of the ground space.
    """
    if H.nqubits > MAX_QUBITS:
        raise ValueError(f"N={H.nqubits} exceeds the solver cap of {MAX_QUBITS}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    rng = as_generator(rng)
    compiled = CompiledOperator(H)
    dim = compiled.dim

    dtype = np.float64 if compiled.is_real else np.complex128
    v = rng.standard_normal(dim)
    if not compiled.is_real:
        v = v + 1j * rng.standard_normal(dim)
    v = v.astype(dtype)
    v /= np.linalg.norm(v)

    Q = np.zeros((min(max_iter, 64), dim), dtype=dtype)
    Q[0] = v
    alphas: list[float] = []
    betas: list[float] = []
    best_residual = np.inf
    theta = gap = None
    converged = False

    for it in range(1, max_iter + 1):
        if it == Q.shape[0]:
            Q = np.concatenate([Q, np.zeros_like(Q[: min(Q.shape[0], max_iter - it + 1)])])
        w = compiled.matvec(Q[it - 1])
        alphas.append(float(np.vdot(Q[it - 1], w).real))
        w = _reorthogonalize(w, Q[:it])
        beta = float(np.linalg.norm(w))
        evals, evecs = eigh_tridiagonal(alphas, betas, select="i", select_range=(0, min(1, it - 1)))
        theta = float(evals[0])
        gap = float(evals[1] - evals[0]) if len(evals) > 1 else np.inf
        residual = beta * abs(evecs[-1, 0])
        best_residual = min(best_residual, residual)
        if residual <= tol or beta < 1e-14:
            converged = True
            break
        betas.append(beta)
        Q[it] = w / beta

    if not converged:
        raise SolverError(
            f"no convergence after {max_iter} iterations (best residual {best_residual:.3e})",
            best_residual,
        )

    x = Q[:it].T @ evecs[:, 0]
    x /= np.linalg.norm(x)
    true_residual = float(np.linalg.norm(compiled.matvec(x) - theta * x))
    gap = min(gap, _gap_estimate(compiled, x, theta, rng))
    if gap < DEGENERACY_GAP:
        warnings.warn(
            f"near-degenerate ground space (gap {gap:.3e}); returned vector is arbitrary",
            stacklevel=2,
        )
    state = StateVector(x.astype(np.complex128) if compiled.is_real else x)
    return GroundState(theta, state, true_residual, gap, it)


def dense_diagonalize(H: SparseOperator) -> tuple[np.ndarray, np.ndarray]:
    """Full spectrum (ascending) and ground eigenvector of the dense matrix.

    Test oracle; capped at N <= 12.
    """
    n = H.nqubits
    if n > DENSE_MAX_QUBITS:
        raise ValueError(f"dense diagonalization capped at N={DENSE_MAX_QUBITS}, got {n}")
    dim = 2**n
    mat = np.zeros((dim, dim), dtype=np.complex128)
    idx = np.arange(dim)
    from .paulis import _parity_signs  # noqa: PLC0415

    for coeff, ps in H.terms:
        cols = idx
        rows = idx ^ ps.flip_mask
        vals = np.full(dim, coeff * 1j**ps.ny, dtype=np.complex128)
        if ps.phase_mask:
            vals *= _parity_signs(n)[idx & ps.phase_mask]
        mat[rows, cols] += vals
    evals, evecs = np.linalg.eigh(mat)
    return evals, evecs[:, 0]


def exact_correlation(gs: GroundState) -> np.ndarray:
    """Two-point correlations C_ij = (<XX> + <YY> + <ZZ>)/3 with unit diagonal."""
    n = gs.nqubits
    amps = gs.state.amplitudes
    C = np.eye(n)
    probs = np.abs(amps) ** 2
    # Z part in one pass: s[k, i] = +-1 depending on bit i of k
    idx = np.arange(2**n)
    signs = 1.0 - 2.0 * ((idx[:, None] >> np.arange(n)[None, :]) & 1)
    zz = signs.T @ (probs[:, None] * signs)
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            ops = ["I"] * n
            ops[i - 1] = ops[j - 1] = "X"
            xx = expectation(gs.state, PauliString("".join(ops)))
            ops[i - 1] = ops[j - 1] = "Y"
            yy = expectation(gs.state, PauliString("".join(ops)))
            C[i - 1, j - 1] = C[j - 1, i - 1] = (xx + yy + zz[i - 1, j - 1]) / 3.0
    return C


def reduced_density_pair(state: StateVector, site: int) -> np.ndarray:
    """4x4 reduced density matrix of the adjacent pair (site, site+1)."""
    n = state.nqubits
    if not 1 <= site <= n - 1:
        raise ValueError(f"pair ({site}, {site + 1}) out of range for N={n}")
    tensor = state.amplitudes.reshape([2] * n)
    # axis t holds site n - t; move the pair's axes to the front
    ax_i, ax_j = n - site, n - site - 1
    moved = np.moveaxis(tensor, (ax_i, ax_j), (0, 1))
    A = moved.reshape(4, -1)
    return A @ A.conj().T


def exact_renyi2_adjacent(gs: GroundState) -> np.ndarray:
    """S_2 = -log2 tr(rho_A^2) for each adjacent pair A = {i, i+1}."""
    n = gs.nqubits
    if n < 2:
        raise ValueError("need at least 2 qubits")
    out = np.empty(n - 1)
    for site in range(1, n):
        rho = reduced_density_pair(gs.state, site)
        purity = float(np.einsum("ij,ji->", rho, rho).real)
        out[site - 1] = -np.log2(min(max(purity, 0.25), 1.0))
    return out


PHASE_CLASSES = ("disordered", "Z2", "Z3")
Z2_THRESHOLD = 0.7
Z3_THRESHOLD = 0.6


@dataclass(frozen=True)
class PhaseLabel:
    label: str  # one of PHASE_CLASSES
    scores: tuple[float, float]  # (s2, s3)

    @property
    def index(self) -> int:
        return PHASE_CLASSES.index(self.label)


def sublattice_sites(nqubits: int, period: int) -> list[int]:
    """Sites {period*k + 1} for k = 0 .. floor((N-1)/period)."""
    return [period * k + 1 for k in range((nqubits - 1) // period + 1)]


def phase_label_from_scores(s2: float, s3: float) -> PhaseLabel:
    """Threshold rule on the two sublattice occupation scores; ties are disordered."""
    if s2 > max(s3, Z2_THRESHOLD):
        label = "Z2"
    elif s3 > max(s2, Z3_THRESHOLD):
        label = "Z3"
    else:
        label = "disordered"
    return PhaseLabel(label, (float(s2), float(s3)))


def occupation_scores(state: StateVector) -> tuple[float, float]:
    """Mean occupation (bit 0 <-> Z=+1 <-> occupied) over the period-2 and
    period-3 sublattices."""
    n = state.nqubits
    probs = np.abs(state.amplitudes) ** 2
    idx = np.arange(2**n)
    occ = np.array([probs @ (1.0 - ((idx >> k) & 1)) for k in range(n)])
    s2 = float(np.mean([occ[s - 1] for s in sublattice_sites(n, 2)]))
    s3 = float(np.mean([occ[s - 1] for s in sublattice_sites(n, 3)]))
    return s2, s3


def exact_phase_label(gs: GroundState) -> PhaseLabel:
    if gs.nqubits < 3:
        raise ValueError("phase labels need at least 3 qubits")
    s2, s3 = occupation_scores(gs.state)
    return phase_label_from_scores(s2, s3)
