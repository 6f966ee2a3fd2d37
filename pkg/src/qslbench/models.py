"""Linear and kernel learners.

Ridge solves its normal equations through a Cholesky factorization shared
across targets; lasso runs cyclic coordinate descent with soft
thresholding; the kernel machines work in the dual. Every fit is a pure
function of (data, hyperparameters, seed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve


class FitError(RuntimeError):
    pass


@dataclass
class LinearModel:
    """Weights per target column plus the intercepts; kind is "ridge" or "lasso"."""

    kind: str
    weights: np.ndarray  # (d, T)
    intercept: np.ndarray  # (T,)
    lam: float

    def predict(self, Phi: np.ndarray) -> np.ndarray:
        return np.asarray(Phi) @ self.weights + self.intercept


def fit_ridge(Phi: np.ndarray, y: np.ndarray, lam: float, fit_intercept: bool = True) -> LinearModel:
    """w = (Phi^T Phi + n lam I)^{-1} Phi^T y via Cholesky; multi-target y shares
    the factorization. Raises FitError for a singular system (lam = 0 with
    rank-deficient features)."""
    Phi = np.asarray(Phi, dtype=np.float64)
    Y = np.asarray(y, dtype=np.float64)
    squeeze = Y.ndim == 1
    Y = Y[:, None] if squeeze else Y
    if Phi.shape[0] != Y.shape[0]:
        raise ValueError("row count mismatch between features and targets")
    if lam < 0:
        raise ValueError("lam must be non-negative")
    n, d = Phi.shape
    if fit_intercept:
        mu_x, mu_y = Phi.mean(axis=0), Y.mean(axis=0)
        Xc, Yc = Phi - mu_x, Y - mu_y
    else:
        mu_x, mu_y = np.zeros(d), np.zeros(Y.shape[1])
        Xc, Yc = Phi, Y
    A = Xc.T @ Xc + n * lam * np.eye(d)
    try:
        W = cho_solve(cho_factor(A), Xc.T @ Yc)
    except np.linalg.LinAlgError as err:
        raise FitError(f"singular normal equations: {err}") from err
    intercept = mu_y - mu_x @ W
    if squeeze:
        pass  # keep (d, 1); predictions stay two-dimensional only for multi-target
    return LinearModel("ridge", W, intercept, float(lam))


def ridge_grid(Phi: np.ndarray, Y: np.ndarray, lams) -> list[LinearModel]:
    """Ridge fits for every lam on one eigendecomposition of Phi^T Phi."""
    Phi = np.asarray(Phi, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    Y = Y[:, None] if Y.ndim == 1 else Y
    n, d = Phi.shape
    mu_x, mu_y = Phi.mean(axis=0), Y.mean(axis=0)
    Xc, Yc = Phi - mu_x, Y - mu_y
    s, V = np.linalg.eigh(Xc.T @ Xc)
    proj = V.T @ (Xc.T @ Yc)
    out = []
    for lam in lams:
        denom = s + n * float(lam)
        if np.any(denom <= 0):
            raise FitError("singular normal equations at lam=0")
        W = V @ (proj / denom[:, None])
        out.append(LinearModel("ridge", W, mu_y - mu_x @ W, float(lam)))
    return out


def fit_lasso(
    Phi: np.ndarray,
    y: np.ndarray,
    lam: float,
    tol: float = 1e-7,
    max_sweeps: int = 50_000,
    fit_intercept: bool = True,
    warm_start: np.ndarray | None = None,
    strict: bool = True,
) -> LinearModel:
    """Cyclic coordinate descent on (1/2n)||y - Phi w||^2 + lam ||w||_1,
    i.e. soft thresholding at lam for unit-variance columns.

    Full sweeps alternate with passes over the active (nonzero) set;
    convergence means a full sweep moved no coefficient by tol or more.
    Columns are expected pre-scaled to comparable magnitude. When the sweep
    budget runs out, raises FitError reporting the remaining gap, or with
    strict=False returns the best-effort model (grid-search use).
    """
    Phi = np.asarray(Phi, dtype=np.float64)
    Y = np.asarray(y, dtype=np.float64)
    Y = Y[:, None] if Y.ndim == 1 else Y
    if lam < 0:
        raise ValueError("lam must be non-negative")
    n, d = Phi.shape
    if fit_intercept:
        mu_x, mu_y = Phi.mean(axis=0), Y.mean(axis=0)
        Xc, Yc = Phi - mu_x, Y - mu_y
    else:
        mu_x, mu_y = np.zeros(d), np.zeros(Y.shape[1])
        Xc, Yc = Phi, Y
    # covariance updates: per-sweep cost is O(d^2) independent of n
    G = Xc.T @ Xc / n  # (d, d)
    col_sq = np.diag(G).copy()
    B = Xc.T @ Yc / n  # (d, T)
    T = Yc.shape[1]
    W = np.zeros((d, T)) if warm_start is None else np.array(warm_start, dtype=np.float64)
    GW = G @ W

    def sweep(coords) -> float:
        delta_max = 0.0
        for j in coords:
            if col_sq[j] <= 0:
                continue
            rho = B[j] - GW[j] + col_sq[j] * W[j]
            w_new = np.sign(rho) * np.maximum(np.abs(rho) - lam, 0.0) / col_sq[j]
            change = w_new - W[j]
            if np.any(np.abs(change) > 0):
                GW[:, :] += np.outer(G[:, j], change)
                W[j] = w_new
                delta_max = max(delta_max, float(np.max(np.abs(change))))
        return delta_max

    all_coords = range(d)
    sweeps = 0
    converged = False
    delta_max = np.inf
    while sweeps < max_sweeps:
        delta_max = sweep(all_coords)
        sweeps += 1
        if delta_max < tol:
            converged = True
            break
        active = [j for j in all_coords if np.any(W[j] != 0.0)]
        if len(active) < d:
            while sweeps < max_sweeps:
                if sweep(active) < tol:
                    break
                sweeps += 1
    if not converged and strict:
        raise FitError(f"lasso did not converge: last max coefficient change {delta_max:.3e}")
    intercept = mu_y - mu_x @ W
    return LinearModel("lasso", W, intercept, float(lam))


def lasso_kkt_violation(Phi: np.ndarray, y: np.ndarray, model: LinearModel) -> float:
    """Largest KKT violation of the lasso stationarity conditions."""
    Phi = np.asarray(Phi, dtype=np.float64)
    Y = np.asarray(y, dtype=np.float64)
    Y = Y[:, None] if Y.ndim == 1 else Y
    n = Phi.shape[0]
    R = Y - model.predict(Phi)
    grad = -Phi.T @ R / n  # gradient of the (1/2n) squared loss
    worst = 0.0
    for j in range(grad.shape[0]):
        for t in range(grad.shape[1]):
            w = model.weights[j, t]
            g = grad[j, t]
            if w == 0.0:
                worst = max(worst, abs(g) - model.lam)
            else:
                worst = max(worst, abs(g + model.lam * np.sign(w)))
    return worst


@dataclass
class KernelModel:
    """Dual-form learner; stores the training inputs needed to evaluate kernels."""

    kind: str  # "kernel_ridge" or "kernel_logistic"
    dual: np.ndarray  # (n, T) or (n, classes)
    intercept: np.ndarray
    lam: float
    kernel: str  # "dirichlet", "rbf", "ntk", or "precomputed"
    X_train: np.ndarray | None = None
    gamma2: float | None = None

    def gram(self, X: np.ndarray) -> np.ndarray:
        from .features import dirichlet_gram, ntk_gram, rbf_gram  # noqa: PLC0415

        if self.kernel == "rbf":
            return rbf_gram(X, self.X_train, gamma2=self.gamma2)
        if self.kernel == "dirichlet":
            return dirichlet_gram(X, self.X_train)
        if self.kernel == "ntk":
            return ntk_gram(X, self.X_train)
        raise ValueError("model was fit on a precomputed Gram; pass one to predict")

    def predict(self, K_or_X: np.ndarray, precomputed: bool = False) -> np.ndarray:
        K = np.asarray(K_or_X) if precomputed else self.gram(K_or_X)
        scores = K @ self.dual + self.intercept
        if self.kind == "kernel_logistic":
            return _softmax(scores)
        return scores


def _softmax(scores: np.ndarray) -> np.ndarray:
    z = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _solve_psd(K: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        return cho_solve(cho_factor(K), rhs)
    except np.linalg.LinAlgError:
        jitter = 1e-10 * max(float(np.trace(K)) / K.shape[0], 1.0)
        try:
            return cho_solve(cho_factor(K + jitter * np.eye(K.shape[0])), rhs)
        except np.linalg.LinAlgError as err:
            raise FitError(f"kernel matrix is not positive definite: {err}") from err


def fit_kernel_ridge(
    K: np.ndarray,
    y: np.ndarray,
    lam: float,
    kernel: str = "precomputed",
    X_train: np.ndarray | None = None,
    gamma2: float | None = None,
) -> KernelModel:
    """alpha = (K + n lam I)^{-1} y on a centered-target dual problem."""
    K = np.asarray(K, dtype=np.float64)
    Y = np.asarray(y, dtype=np.float64)
    Y = Y[:, None] if Y.ndim == 1 else Y
    n = K.shape[0]
    if K.shape != (n, n) or Y.shape[0] != n:
        raise ValueError("Gram matrix must be square and match the targets")
    mu = Y.mean(axis=0)
    dual = _solve_psd(K + n * float(lam) * np.eye(n), Y - mu)
    return KernelModel("kernel_ridge", dual, mu, float(lam), kernel, X_train, gamma2)


def fit_kernel_logistic(
    K: np.ndarray,
    labels: np.ndarray,
    lam: float,
    steps: int = 500,
    n_classes: int = 3,
    kernel: str = "precomputed",
    X_train: np.ndarray | None = None,
    gamma2: float | None = None,
) -> KernelModel:
    """Multinomial logistic regression in the dual by full-batch descent.

    Functional-gradient updates on softmax cross-entropy plus lam alpha^T K
    alpha; deterministic zero initialization and a step size set from the
    top Gram eigenvalue.
    """
    K = np.asarray(K, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n = K.shape[0]
    Y = np.zeros((n, n_classes))
    Y[np.arange(n), labels] = 1.0
    alpha = np.zeros((n, n_classes))
    intercept = np.zeros(n_classes)
    lmax = float(np.linalg.eigvalsh(K)[-1])
    step = 1.0 / (0.5 * lmax / n + 2.0 * float(lam) + 1e-12)
    for _ in range(steps):
        p = _softmax(K @ alpha + intercept)
        g = (p - Y) / n
        alpha -= step * (g + 2.0 * float(lam) * alpha)
        intercept -= step * g.sum(axis=0)
    return KernelModel("kernel_logistic", alpha, intercept, float(lam), kernel, X_train, gamma2)
