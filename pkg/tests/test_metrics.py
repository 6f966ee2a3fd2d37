import numpy as np
import pytest

from qslbench.metrics import accuracy, evaluate, rmse_correlation, rmse_entropy


def test_rmse_correlation_perfect():
    C = np.random.default_rng(1).uniform(-1, 1, size=(5, 3, 3))
    assert rmse_correlation(C, C) == 0.0


def test_rmse_correlation_arithmetic():
    # N=2, one test instance, both off-diagonal errors 0.3, diagonal exact
    exact = np.array([[[1.0, 0.2], [0.2, 1.0]]])
    pred = np.array([[[1.0, 0.5], [0.5, 1.0]]])
    want = np.sqrt((0.0 + 0.09 + 0.09 + 0.0) / 4.0)
    assert rmse_correlation(pred, exact) == pytest.approx(want)
    assert want == pytest.approx(0.21213, abs=1e-5)


def test_rmse_entropy_arithmetic():
    exact = np.zeros((10, 4))
    pred = np.full((10, 4), 0.2)  # per-target MSE 0.04
    assert rmse_entropy(pred, exact) == pytest.approx(0.2)
    assert rmse_entropy(exact, exact) == 0.0


def test_rmse_shapes_enforced():
    with pytest.raises(ValueError):
        rmse_correlation(np.zeros((2, 3, 3)), np.zeros((2, 3, 2)))
    with pytest.raises(ValueError):
        rmse_entropy(np.zeros((2, 3)), np.zeros((2, 4)))


def test_accuracy_examples():
    a = np.array([0, 1, 2, 1])
    assert accuracy(a, a) == 1.0
    assert accuracy(a, (a + 1) % 3) == 0.0
    assert accuracy(np.array([0, 0, 1, 1]), np.array([0, 0, 2, 2])) == 0.5


def test_evaluate_dispatch():
    y = np.array([0, 1])
    assert evaluate("phase", y, y) == 1.0
    with pytest.raises(ValueError):
        evaluate("energy", y, y)
