import numpy as np
import pytest

from qslbench.mlp import (
    TrainingDiverged,
    fit_mlp,
    init_params,
    loss_and_grads,
    parameter_count,
)
from qslbench.rng import substream


def test_parameter_count_formula():
    assert parameter_count(126, 128, 1) == 126 * 128 + 128 + 128 * 1 + 1 == 16385


def test_gradient_check_central_differences(rng):
    """Analytic gradients against central finite differences, 20 coordinates."""
    params = init_params(5, 8, 2, substream(1))
    X = rng.normal(size=(12, 5))
    Y = rng.normal(size=(12, 2))
    coords = [(k, i) for k in ("W1", "b1", "W2", "b2") for i in range(params[k].size)]
    for task, Yt in (("regression", Y), ("classification", np.eye(2)[rng.integers(0, 2, 12)])):
        _, grads = loss_and_grads(params, X, Yt, task, lam=0.01)
        eps = 1e-6
        checked = 0
        for pick in rng.choice(len(coords), size=20, replace=False):
            key, idx = coords[pick]
            flat = params[key].reshape(-1)
            orig = flat[idx]
            flat[idx] = orig + eps
            lp, _ = loss_and_grads(params, X, Yt, task, lam=0.01)
            flat[idx] = orig - eps
            lm, _ = loss_and_grads(params, X, Yt, task, lam=0.01)
            flat[idx] = orig
            fd = (lp - lm) / (2 * eps)
            analytic = grads[key].reshape(-1)[idx]
            denom = max(abs(fd), abs(analytic), 1e-8)
            assert abs(fd - analytic) / denom < 1e-4
            checked += 1
        assert checked == 20


def test_gradient_check_with_frozen_dropout_mask(rng):
    params = init_params(4, 8, 1, substream(2))
    X = rng.normal(size=(6, 4))
    Y = rng.normal(size=(6, 1))
    mask = (rng.random((6, 8)) >= 0.5).astype(float)
    _, grads = loss_and_grads(params, X, Y, "regression", 0.0, dropout_mask=mask)
    eps = 1e-6
    flat = params["W1"].reshape(-1)
    for idx in rng.choice(flat.size, size=6, replace=False):
        orig = flat[idx]
        flat[idx] = orig + eps
        lp, _ = loss_and_grads(params, X, Y, "regression", 0.0, dropout_mask=mask)
        flat[idx] = orig - eps
        lm, _ = loss_and_grads(params, X, Y, "regression", 0.0, dropout_mask=mask)
        flat[idx] = orig
        fd = (lp - lm) / (2 * eps)
        analytic = grads["W1"].reshape(-1)[idx]
        assert abs(fd - analytic) / max(abs(fd), 1e-8) < 1e-4


def test_fit_learns_linear_map(rng):
    X = rng.normal(size=(200, 3))
    y = X @ np.array([1.0, -2.0, 0.5])
    model = fit_mlp(X, y, width=32, epochs=300, dropout=False, rng=substream(3))
    pred = model.predict(X)[:, 0]
    assert np.mean((pred - y) ** 2) < 0.05


def test_classification_one_hot_and_probabilities(rng):
    X = rng.normal(size=(150, 2))
    labels = (X[:, 0] > 0).astype(int)
    Y = np.eye(2)[labels]
    model = fit_mlp(X, Y, task="classification", width=16, epochs=200, dropout=False, rng=substream(4))
    p = model.predict(X)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)
    assert np.mean(np.argmax(p, axis=1) == labels) > 0.9


def test_regularization_monotone_trend(rng):
    X = rng.normal(size=(80, 4))
    y = X @ np.array([2.0, -1.0, 0.0, 0.5]) + 0.01 * rng.normal(size=80)
    train_errors, norms = [], []
    for lam in (0.0, 1e-3, 1e-1, 10.0):
        model = fit_mlp(X, y, width=16, lam=lam, epochs=150, dropout=False, rng=substream(5))
        pred = model.predict(X)[:, 0]
        train_errors.append(float(np.mean((pred - y) ** 2)))
        norms.append(float(np.linalg.norm(model.params["W1"])))
    assert norms[-1] < norms[0]
    assert train_errors[-1] > train_errors[0]


def test_deterministic_given_seed(rng):
    X = rng.normal(size=(60, 3))
    y = rng.normal(size=60)
    m1 = fit_mlp(X, y, width=8, epochs=20, rng=substream(6))
    m2 = fit_mlp(X, y, width=8, epochs=20, rng=substream(6))
    Xt = rng.normal(size=(10, 3))
    np.testing.assert_array_equal(m1.predict(Xt), m2.predict(Xt))


def test_prediction_repeatable_dropout_disabled(rng):
    X = rng.normal(size=(50, 3))
    y = rng.normal(size=50)
    model = fit_mlp(X, y, width=8, epochs=10, rng=substream(7))
    Xt = rng.normal(size=(5, 3))
    np.testing.assert_array_equal(model.predict(Xt), model.predict(Xt))


def test_divergence_detected(rng):
    X = rng.normal(size=(20, 2))
    X[3, 1] = np.nan  # any non-finite loss must surface, not train on
    y = rng.normal(size=20)
    with pytest.raises(TrainingDiverged):
        fit_mlp(X, y, width=8, epochs=50, dropout=False, rng=substream(8))
