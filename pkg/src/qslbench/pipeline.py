"""Trainable model pipelines: feature map + learner + prediction, as one
serializable unit.

A pipeline is what the experiment runner and the CLI train/eval commands
share: it is fit on a labeled training split, predicts labels in the
task's exact-label shape, and round-trips through a tagged npz record.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .datasets import LabeledDataset
from .features import (
    FeatureSpec,
    Standardizer,
    dirichlet_gram,
    featurize_batch,
    make_concat_rff,
    ntk_gram,
    rbf_bandwidth,
    rbf_gram,
    with_measurements,
)
from .forest import RandomForest, _Tree, fit_random_forest
from .metrics import accuracy
from .mlp import MLPModel, fit_mlp
from .models import (
    KernelModel,
    LinearModel,
    fit_kernel_logistic,
    fit_kernel_ridge,
    fit_lasso,
    ridge_grid,
)
from .rng import substream

LAMBDA_GRID = tuple(10.0**k for k in range(-4, 5))
FOREST_TREES_GRID = (50, 200)
FOREST_DEPTH_GRID = (4, 8, None)
MLP_LAMBDA_GRID = (1e-4, 1e-2, 1.0)
VALIDATION_FRACTION = 0.2

REGRESSION_MODELS = ("ridge", "lasso", "kernel_rbf", "kernel_dirichlet", "kernel_ntk", "mlp")
PHASE_MODELS = (
    "random_forest", "random_forest_scores", "kernel_rbf", "kernel_dirichlet",
    "kernel_ntk", "mlp",
)


@dataclass(frozen=True)
class ModelConfig:
    name: str
    use_measurements: bool = False
    randomized_measurements: bool = False  # noise features in place of real ones

    @property
    def label(self) -> str:
        tag = self.name
        if self.use_measurements:
            tag += "-A"
        if self.randomized_measurements:
            tag += "-rand"
        return tag


def _pair_targets(y: np.ndarray) -> np.ndarray:
    """Flatten (n, N, N) correlation stacks to their upper-triangular columns."""
    iu = np.triu_indices(y.shape[1], k=1)
    return y[:, iu[0], iu[1]]


def _pairs_to_matrix(cols: np.ndarray, n_qubits: int) -> np.ndarray:
    iu = np.triu_indices(n_qubits, k=1)
    out = np.zeros((cols.shape[0], n_qubits, n_qubits))
    out[:, np.arange(n_qubits), np.arange(n_qubits)] = 1.0
    out[:, iu[0], iu[1]] = cols
    out[:, iu[1], iu[0]] = cols
    return out


def _regression_targets(labeled: LabeledDataset) -> np.ndarray:
    if labeled.task == "correlation":
        return _pair_targets(labeled.y)
    return labeled.y


def _val_split(n: int, rng) -> tuple[np.ndarray, np.ndarray]:
    perm = rng.permutation(n)
    n_val = max(1, int(round(n * VALIDATION_FRACTION)))
    return perm[n_val:], perm[:n_val]


def _kernel_of(name: str) -> str:
    return {"kernel_rbf": "rbf", "kernel_dirichlet": "dirichlet", "kernel_ntk": "ntk"}[name]


def _gram(kernel: str, X, X2=None, gamma2=None):
    if kernel == "rbf":
        return rbf_gram(X, X2, gamma2=gamma2)
    if kernel == "dirichlet":
        return dirichlet_gram(X, X2)
    return ntk_gram(X, X2)


@dataclass
class Pipeline:
    """A fitted model plus everything needed to featurize fresh inputs."""

    model_cfg: ModelConfig
    task: str
    nqubits: int
    spec: FeatureSpec | None = None
    scaler: Standardizer | None = None
    linear: LinearModel | None = None
    kernel: KernelModel | None = None
    forest: RandomForest | None = None
    mlp: MLPModel | None = None
    constant: int | None = None  # degenerate single-class fallback

    def _features(self, labeled: LabeledDataset) -> np.ndarray:
        if self.model_cfg.name == "random_forest_scores":
            return labeled.scores
        spec = self.spec if self.spec is not None else FeatureSpec("raw", labeled.x.shape[1])
        if self.model_cfg.use_measurements:
            return featurize_batch(with_measurements(spec), labeled.x, labeled.payloads)
        return featurize_batch(spec, labeled.x)

    def predict(self, labeled: LabeledDataset) -> np.ndarray:
        """Labels in the exact-label shape: (n, N, N), (n, N-1), or (n,) ints."""
        if self.constant is not None:
            return np.full(labeled.count, self.constant)
        if self.kernel is not None:
            K = _gram(self.kernel.kernel, labeled.x, self.kernel.X_train,
                      gamma2=self.kernel.gamma2)
            out = self.kernel.predict(K, precomputed=True)
            if self.task == "phase":
                return np.argmax(out, axis=1)
            return self._shape(out)
        X = self._features(labeled)
        if self.scaler is not None:
            X = self.scaler.transform(X)
        if self.linear is not None:
            return self._shape(self.linear.predict(X))
        if self.forest is not None:
            return self.forest.predict(X)
        if self.mlp is not None:
            out = self.mlp.predict(X)
            if self.task == "phase":
                return np.argmax(out, axis=1)
            return self._shape(out)
        raise RuntimeError("pipeline has no fitted model")

    def _shape(self, cols: np.ndarray) -> np.ndarray:
        if self.task == "correlation":
            return _pairs_to_matrix(cols, self.nqubits)
        return cols


def train_model(
    model_cfg: ModelConfig,
    task: str,
    nqubits: int,
    train: LabeledDataset,
    stream_key: tuple,
) -> Pipeline:
    """Fit one model with its fixed hyperparameter grid and validation split.

    ``stream_key`` is a (seed, *path) tuple; all randomness (feature map,
    validation split, tree bootstraps, network init) flows from it.
    """
    name = model_cfg.name

    def stream(*suffix):
        seed, *path = stream_key
        return substream(seed, *path, *suffix)

    pipe = Pipeline(model_cfg, task, nqubits)
    if task == "phase":
        y_tr = train.y
        if len(np.unique(y_tr)) < 2:
            pipe.constant = int(y_tr[0])
            return pipe
    else:
        y_tr = _regression_targets(train)

    if name in ("ridge", "lasso"):
        pipe.spec = make_concat_rff(train.x.shape[1], stream("rff"))
        Phi = pipe._features(train)
        pipe.scaler = Standardizer().fit(Phi)
        Phi = pipe.scaler.transform(Phi)
        tr, val = _val_split(train.count, stream("val"))
        best = None
        if name == "ridge":
            for lam, model in zip(LAMBDA_GRID, ridge_grid(Phi[tr], y_tr[tr], LAMBDA_GRID)):
                err = float(np.mean((model.predict(Phi[val]) - y_tr[val]) ** 2))
                if best is None or err < best[0]:
                    best = (err, lam)
            pipe.linear = ridge_grid(Phi, y_tr, [best[1]])[0]
        else:
            warm = None
            best_w = None
            for lam in sorted(LAMBDA_GRID, reverse=True):
                # loose best-effort fits are plenty for picking lam
                model = fit_lasso(Phi[tr], y_tr[tr], lam, tol=1e-5, max_sweeps=2000,
                                  warm_start=warm, strict=False)
                warm = model.weights
                err = float(np.mean((model.predict(Phi[val]) - y_tr[val]) ** 2))
                if best is None or err < best[0]:
                    best = (err, lam)
                    best_w = model.weights
            pipe.linear = fit_lasso(Phi, y_tr, best[1], tol=1e-6, max_sweeps=100_000,
                                    warm_start=best_w)
        return pipe

    if name.startswith("kernel_"):
        kernel = _kernel_of(name)
        gamma2 = rbf_bandwidth(train.x) if kernel == "rbf" else None
        K = _gram(kernel, train.x, gamma2=gamma2)
        tr, val = _val_split(train.count, stream("val"))
        best = None
        for lam in LAMBDA_GRID:
            if task == "phase":
                m = fit_kernel_logistic(K[np.ix_(tr, tr)], y_tr[tr], lam)
                p = m.predict(K[np.ix_(val, tr)], precomputed=True)
                score = -accuracy(np.argmax(p, axis=1), y_tr[val])
            else:
                m = fit_kernel_ridge(K[np.ix_(tr, tr)], y_tr[tr], lam)
                p = m.predict(K[np.ix_(val, tr)], precomputed=True)
                score = float(np.mean((p - y_tr[val]) ** 2))
            if best is None or score < best[0]:
                best = (score, lam)
        fit = fit_kernel_logistic if task == "phase" else fit_kernel_ridge
        pipe.kernel = fit(K, y_tr, best[1], kernel=kernel, X_train=train.x, gamma2=gamma2)
        return pipe

    if name in ("random_forest", "random_forest_scores"):
        if task != "phase":
            raise ValueError("random forests handle the phase task")
        X = pipe._features(train)
        tr, val = _val_split(train.count, stream("val"))
        best = None
        for trees in FOREST_TREES_GRID:
            for depth in FOREST_DEPTH_GRID:
                if len(np.unique(y_tr[tr])) < 2:
                    continue
                f = fit_random_forest(
                    X[tr], y_tr[tr], trees=trees, max_depth=depth,
                    rng=stream("rf", trees, depth or 0), n_classes=3,
                )
                score = -accuracy(f.predict(X[val]), y_tr[val])
                if best is None or score < best[0]:
                    best = (score, trees, depth)
        trees, depth = (best[1], best[2]) if best else (FOREST_TREES_GRID[-1], None)
        pipe.forest = fit_random_forest(
            X, y_tr, trees=trees, max_depth=depth, rng=stream("rf-final"), n_classes=3
        )
        return pipe

    if name == "mlp":
        X = pipe._features(train)
        pipe.scaler = Standardizer().fit(X)
        X = pipe.scaler.transform(X)
        if task == "phase":
            Y, mlp_task = np.eye(3)[y_tr], "classification"
        else:
            Y, mlp_task = y_tr, "regression"
        best = None
        for lam in MLP_LAMBDA_GRID:
            m = fit_mlp(X, Y, task=mlp_task, lam=lam, rng=stream("mlp", repr(lam)))
            if best is None or m.best_val_loss < best[0]:
                best = (m.best_val_loss, m)
        pipe.mlp = best[1]
        return pipe

    raise ValueError(f"unknown model {name!r}")


# ---------------------------------------------------------------------------
# serialization: tagged npz record

def save_pipeline(pipe: Pipeline, path) -> None:
    meta = {
        "kind": pipe.model_cfg.name,
        "use_measurements": pipe.model_cfg.use_measurements,
        "randomized_measurements": pipe.model_cfg.randomized_measurements,
        "task": pipe.task,
        "nqubits": pipe.nqubits,
        "constant": pipe.constant,
    }
    arrays: dict[str, np.ndarray] = {}
    if pipe.spec is not None:
        meta["spec_kind"] = pipe.spec.kind
        meta["spec_input_dim"] = pipe.spec.input_dim
        if pipe.spec.frequencies is not None:
            arrays["spec_W"] = pipe.spec.frequencies
            arrays["spec_b"] = pipe.spec.phases
    if pipe.scaler is not None:
        arrays["scaler_mean"] = pipe.scaler.mean
        arrays["scaler_scale"] = pipe.scaler.scale
    if pipe.linear is not None:
        meta["linear_kind"] = pipe.linear.kind
        meta["lam"] = pipe.linear.lam
        arrays["linear_w"] = pipe.linear.weights
        arrays["linear_b"] = pipe.linear.intercept
    if pipe.kernel is not None:
        meta["kernel_kind"] = pipe.kernel.kind
        meta["kernel"] = pipe.kernel.kernel
        meta["lam"] = pipe.kernel.lam
        meta["gamma2"] = pipe.kernel.gamma2
        arrays["kernel_dual"] = pipe.kernel.dual
        arrays["kernel_intercept"] = pipe.kernel.intercept
        arrays["kernel_X"] = pipe.kernel.X_train
    if pipe.forest is not None:
        meta["forest_trees"] = len(pipe.forest.trees)
        meta["forest_classes"] = pipe.forest.n_classes
        meta["forest_features"] = pipe.forest.n_features
        for t, tree in enumerate(pipe.forest.trees):
            arrays[f"tree{t}_feature"] = tree.feature
            arrays[f"tree{t}_threshold"] = tree.threshold
            arrays[f"tree{t}_left"] = tree.left
            arrays[f"tree{t}_right"] = tree.right
            arrays[f"tree{t}_counts"] = tree.counts
    if pipe.mlp is not None:
        meta["mlp_task"] = pipe.mlp.task
        meta["mlp_width"] = pipe.mlp.width
        meta["lam"] = pipe.mlp.lam
        for k, v in pipe.mlp.params.items():
            arrays[f"mlp_{k}"] = v
    np.savez(path, meta=json.dumps(meta, sort_keys=True), **arrays)


def load_pipeline(path) -> Pipeline:
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        cfg = ModelConfig(
            meta["kind"], meta["use_measurements"], meta["randomized_measurements"]
        )
        pipe = Pipeline(cfg, meta["task"], meta["nqubits"])
        pipe.constant = meta["constant"]
        if "spec_kind" in meta:
            W = data["spec_W"] if "spec_W" in data else None
            b = data["spec_b"] if "spec_b" in data else None
            pipe.spec = FeatureSpec(meta["spec_kind"], meta["spec_input_dim"], W, b)
        if "scaler_mean" in data:
            pipe.scaler = Standardizer()
            pipe.scaler.mean = data["scaler_mean"]
            pipe.scaler.scale = data["scaler_scale"]
        if "linear_w" in data:
            pipe.linear = LinearModel(
                meta["linear_kind"], data["linear_w"], data["linear_b"], meta["lam"]
            )
        if "kernel_dual" in data:
            pipe.kernel = KernelModel(
                meta["kernel_kind"], data["kernel_dual"], data["kernel_intercept"],
                meta["lam"], meta["kernel"], data["kernel_X"], meta["gamma2"],
            )
        if "forest_trees" in meta:
            trees = [
                _Tree(
                    data[f"tree{t}_feature"], data[f"tree{t}_threshold"],
                    data[f"tree{t}_left"], data[f"tree{t}_right"],
                    data[f"tree{t}_counts"],
                )
                for t in range(meta["forest_trees"])
            ]
            pipe.forest = RandomForest(trees, meta["forest_classes"], meta["forest_features"])
        if any(k.startswith("mlp_") for k in data.files):
            params = {k[4:]: data[k] for k in data.files if k.startswith("mlp_")}
            pipe.mlp = MLPModel(params, meta["mlp_task"], meta["mlp_width"], meta["lam"])
    return pipe
