"""Benchmark metrics: per-target RMSE aggregates and classification accuracy."""

from __future__ import annotations

import numpy as np


def rmse_correlation(predictions: np.ndarray, exact: np.ndarray) -> float:
    """sqrt of the mean over all N^2 ordered pairs of the per-pair MSE.

    Inputs are (n_test, N, N) stacks; the diagonal is included (a correct
    unit diagonal on both sides contributes zero).
    """
    P = np.asarray(predictions, dtype=np.float64)
    E = np.asarray(exact, dtype=np.float64)
    if P.shape != E.shape or P.ndim != 3 or P.shape[1] != P.shape[2]:
        raise ValueError(f"shape mismatch: {P.shape} vs {E.shape}")
    per_pair_mse = np.mean((P - E) ** 2, axis=0)  # (N, N)
    return float(np.sqrt(per_pair_mse.mean()))


def rmse_entropy(predictions: np.ndarray, exact: np.ndarray) -> float:
    """Same aggregation over the N-1 adjacent-pair entropy targets."""
    P = np.asarray(predictions, dtype=np.float64)
    E = np.asarray(exact, dtype=np.float64)
    if P.shape != E.shape or P.ndim != 2:
        raise ValueError(f"shape mismatch: {P.shape} vs {E.shape}")
    per_target_mse = np.mean((P - E) ** 2, axis=0)
    return float(np.sqrt(per_target_mse.mean()))


def accuracy(predicted: np.ndarray, exact: np.ndarray) -> float:
    predicted = np.asarray(predicted)
    exact = np.asarray(exact)
    if predicted.shape != exact.shape:
        raise ValueError(f"shape mismatch: {predicted.shape} vs {exact.shape}")
    return float(np.mean(predicted == exact))


def evaluate(task: str, predictions: np.ndarray, exact: np.ndarray) -> float:
    if task == "correlation":
        return rmse_correlation(predictions, exact)
    if task == "entropy":
        return rmse_entropy(predictions, exact)
    if task == "phase":
        return accuracy(predictions, exact)
    raise ValueError(f"unknown task {task!r}")
