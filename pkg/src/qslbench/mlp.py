"""One-hidden-layer perceptron trained with Adam on minibatches.

Architecture: FC(d_in x width) -> ReLU -> Dropout(p=0.5) -> FC(width x
d_out), MSE for regression or softmax cross-entropy for classification,
optional L2 weight penalty, early stopping on a held-out split. Gradients
are written out by hand; dropout is active only during training.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import as_generator

DEFAULT_WIDTH = 128
DROPOUT_P = 0.5


class TrainingDiverged(RuntimeError):
    pass


def init_params(d_in: int, width: int, d_out: int, rng) -> dict[str, np.ndarray]:
    rng = as_generator(rng)
    return {
        "W1": rng.standard_normal((d_in, width)) * np.sqrt(2.0 / d_in),
        "b1": np.zeros(width),
        "W2": rng.standard_normal((width, d_out)) * np.sqrt(1.0 / width),
        "b2": np.zeros(d_out),
    }


def parameter_count(d_in: int, width: int, d_out: int) -> int:
    return d_in * width + width + width * d_out + d_out


def forward(params, X, dropout_mask=None):
    """Returns (output, hidden activation after dropout)."""
    H = np.maximum(X @ params["W1"] + params["b1"], 0.0)
    if dropout_mask is not None:
        H = H * dropout_mask / (1.0 - DROPOUT_P)
    return H @ params["W2"] + params["b2"], H


def loss_and_grads(params, X, Y, task: str, lam: float, dropout_mask=None):
    """Loss plus gradients for a batch.

    ``task`` is "regression" (mean squared error over samples and outputs)
    or "classification" (softmax cross-entropy; Y holds one-hot rows). The
    L2 penalty lam applies to the weight matrices, not the biases.
    """
    n = X.shape[0]
    out, H = forward(params, X, dropout_mask)
    if task == "regression":
        diff = out - Y
        loss = float(np.mean(diff**2))
        dout = 2.0 * diff / diff.size
    elif task == "classification":
        z = out - out.max(axis=1, keepdims=True)
        logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
        loss = float(-np.sum(Y * logp) / n)
        dout = (np.exp(logp) - Y) / n
    else:
        raise ValueError(f"unknown task {task!r}")
    loss += lam * (float(np.sum(params["W1"] ** 2)) + float(np.sum(params["W2"] ** 2)))
    gW2 = H.T @ dout + 2.0 * lam * params["W2"]
    gb2 = dout.sum(axis=0)
    dH = dout @ params["W2"].T
    if dropout_mask is not None:
        dH = dH * dropout_mask / (1.0 - DROPOUT_P)
    pre = X @ params["W1"] + params["b1"]
    dpre = dH * (pre > 0)
    gW1 = X.T @ dpre + 2.0 * lam * params["W1"]
    gb1 = dpre.sum(axis=0)
    return loss, {"W1": gW1, "b1": gb1, "W2": gW2, "b2": gb2}


@dataclass
class MLPModel:
    params: dict
    task: str
    width: int
    lam: float
    epochs_run: int = 0
    best_val_loss: float = np.inf

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Deterministic evaluation with dropout disabled."""
        out, _ = forward(self.params, np.asarray(X, dtype=np.float64))
        if self.task == "classification":
            z = out - out.max(axis=1, keepdims=True)
            e = np.exp(z)
            return e / e.sum(axis=1, keepdims=True)
        return out


def fit_mlp(
    X: np.ndarray,
    Y: np.ndarray,
    task: str = "regression",
    width: int = DEFAULT_WIDTH,
    lam: float = 0.0,
    epochs: int = 1000,
    batch_size: int = 32,
    learning_rate: float = 1e-3,
    patience: int = 50,
    val_fraction: float = 0.1,
    dropout: bool = True,
    rng=0,
) -> MLPModel:
    """Adam on minibatches, at most ``epochs`` epochs, early stopping on a
    held-out split; deterministic given the seed. Raises TrainingDiverged
    when the loss turns non-finite."""
    rng = as_generator(rng)
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    n, d_in = X.shape
    d_out = Y.shape[1]
    params = init_params(d_in, width, d_out, rng)

    n_val = max(1, int(round(n * val_fraction))) if n >= 5 else 0
    perm = rng.permutation(n)
    val_idx, train_idx = perm[:n_val], perm[n_val:]
    Xtr, Ytr, Xval, Yval = X[train_idx], Y[train_idx], X[val_idx], Y[val_idx]

    m = {k: np.zeros_like(v) for k, v in params.items()}
    v = {k: np.zeros_like(p) for k, p in params.items()}
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0
    best = {k: p.copy() for k, p in params.items()}
    best_val = np.inf
    stale = 0
    epochs_run = 0

    for epoch in range(1, epochs + 1):
        epochs_run = epoch
        order = rng.permutation(len(Xtr))
        for start in range(0, len(Xtr), batch_size):
            batch = order[start : start + batch_size]
            mask = None
            if dropout:
                mask = (rng.random((len(batch), width)) >= DROPOUT_P).astype(np.float64)
            loss, grads = loss_and_grads(params, Xtr[batch], Ytr[batch], task, lam, mask)
            if not np.isfinite(loss):
                raise TrainingDiverged(f"non-finite loss at epoch {epoch}")
            step += 1
            for k in params:
                m[k] = beta1 * m[k] + (1 - beta1) * grads[k]
                v[k] = beta2 * v[k] + (1 - beta2) * grads[k] ** 2
                mhat = m[k] / (1 - beta1**step)
                vhat = v[k] / (1 - beta2**step)
                params[k] = params[k] - learning_rate * mhat / (np.sqrt(vhat) + eps)
        if n_val:
            val_loss, _ = loss_and_grads(params, Xval, Yval, task, 0.0)
            if val_loss < best_val - 1e-12:
                best_val = val_loss
                best = {k: p.copy() for k, p in params.items()}
                stale = 0
            else:
                stale += 1
                if stale >= patience:
                    break
    if n_val:
        params = best
    return MLPModel(params, task, width, float(lam), epochs_run, float(best_val))
