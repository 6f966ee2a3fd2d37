"""Feature maps and Gram matrices for the benchmark learners.

Random Fourier features follow the cosine construction x -> sqrt(2/d)
cos(Wx + b) with standard-normal frequencies and uniform phases; linear
models concatenate them with the raw parameters. The truncated cosine
(Dirichlet-type) kernel is expanded explicitly over integer frequency
vectors; RBF and NTK kernels are evaluated in closed form.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .rng import as_generator

FEATURE_KINDS = ("raw", "rff", "rff_concat", "with_measurements")


@dataclass(frozen=True)
class FeatureSpec:
    """Frozen description of a feature map, reproducible from its arrays.

    ``kind=with_measurements`` applies the ``base`` map to x and appends the
    flattened measurement block (snapshot-major), scaled to [0, 1].
    """

    kind: str
    input_dim: int
    frequencies: np.ndarray | None = None  # W, (rff_dim, input_dim)
    phases: np.ndarray | None = None  # b in [0, 2pi)
    base: str = "raw"

    def __post_init__(self):
        if self.kind not in FEATURE_KINDS:
            raise ValueError(f"unknown feature kind {self.kind!r}")
        if self.kind in ("rff", "rff_concat") or (
            self.kind == "with_measurements" and self.base in ("rff", "rff_concat")
        ):
            if self.frequencies is None or self.phases is None:
                raise ValueError(f"kind {self.kind!r} needs frequencies and phases")
        if self.frequencies is not None:
            W = np.asarray(self.frequencies, dtype=np.float64)
            b = np.asarray(self.phases, dtype=np.float64)
            if W.shape != (b.size, self.input_dim):
                raise ValueError("frequency matrix shape inconsistent with phases/input_dim")
            object.__setattr__(self, "frequencies", W)
            object.__setattr__(self, "phases", b)
            W.setflags(write=False)
            b.setflags(write=False)

    @property
    def rff_dim(self) -> int:
        return 0 if self.phases is None else self.phases.size


def make_rff(input_dim: int, output_dim: int, rng, kind: str = "rff") -> FeatureSpec:
    """Spec for x -> sqrt(2/output_dim) cos(Wx + b), W ~ N(0,1), b ~ U[0, 2pi)."""
    if input_dim < 1 or output_dim < 1:
        raise ValueError("dimensions must be at least 1")
    rng = as_generator(rng)
    W = rng.standard_normal((output_dim, input_dim))
    b = rng.uniform(0.0, 2.0 * np.pi, size=output_dim)
    return FeatureSpec(kind=kind, input_dim=input_dim, frequencies=W, phases=b)


def make_concat_rff(input_dim: int, rng) -> FeatureSpec:
    """[x || rff(x)] with an rff block as wide as x, total dimension 2*len(x)."""
    return make_rff(input_dim, input_dim, rng, kind="rff_concat")


def with_measurements(spec: FeatureSpec) -> FeatureSpec:
    """Variant of ``spec`` that appends the flattened measurement block."""
    return FeatureSpec(
        kind="with_measurements",
        input_dim=spec.input_dim,
        frequencies=spec.frequencies,
        phases=spec.phases,
        base=spec.kind,
    )


def _rff_block(spec: FeatureSpec, X: np.ndarray) -> np.ndarray:
    d = spec.rff_dim
    return np.sqrt(2.0 / d) * np.cos(X @ spec.frequencies.T + spec.phases)


def _measurement_block(payload) -> np.ndarray:
    """Flattened snapshot-major measurement features in [0, 1].

    Shadow codes are divided by 5; Z-basis bits are used as-is.
    """
    from .shadows import BitstringSet, ShadowSet  # noqa: PLC0415

    if isinstance(payload, ShadowSet):
        return payload.codes.reshape(-1).astype(np.float64) / 5.0
    if isinstance(payload, BitstringSet):
        return payload.bits.reshape(-1).astype(np.float64)
    raise TypeError(f"unsupported measurement payload {type(payload).__name__}")


def featurize(spec: FeatureSpec, x: np.ndarray, payload=None) -> np.ndarray:
    """Map one parameter vector (and optional measurements) to features."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (spec.input_dim,):
        raise ValueError(f"expected input of length {spec.input_dim}, got {x.shape}")
    base = spec.kind if spec.kind != "with_measurements" else spec.base
    if base == "raw":
        feats = x
    elif base == "rff":
        feats = _rff_block(spec, x[None, :])[0]
    elif base == "rff_concat":
        feats = np.concatenate([x, _rff_block(spec, x[None, :])[0]])
    else:  # pragma: no cover
        raise ValueError(f"unknown base kind {base!r}")
    if spec.kind == "with_measurements":
        if payload is None:
            raise ValueError("with_measurements features need a measurement payload")
        return np.concatenate([feats, _measurement_block(payload)])
    if payload is not None:
        raise ValueError(f"kind {spec.kind!r} does not take measurements")
    return feats


def featurize_batch(spec: FeatureSpec, X: np.ndarray, payloads=None) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if payloads is None:
        payloads = [None] * X.shape[0]
    return np.array([featurize(spec, x, p) for x, p in zip(X, payloads)])


@lru_cache(maxsize=32)
def _dirichlet_frequencies(dim: int, cutoff: int) -> np.ndarray:
    """Integer vectors k in Z^dim with ||k||_2 <= cutoff, lexicographic order."""
    rng = range(-cutoff, cutoff + 1)
    ks = [k for k in itertools.product(rng, repeat=dim) if sum(v * v for v in k) <= cutoff**2]
    arr = np.array(ks, dtype=np.float64)
    arr.setflags(write=False)
    return arr


DIRICHLET_CUTOFF = 3
DIRICHLET_MAX_DIM = 4


def dirichlet_features(x: np.ndarray, cutoff: int = DIRICHLET_CUTOFF) -> np.ndarray:
    """Cosine/sine features whose inner product is sum_k cos(pi k (x - x')).

    Frequencies are enumerated over the leading min(len(x), 4) coordinates;
    enumerating over hundreds of dimensions is infeasible and higher
    coordinates are ignored by this kernel.
    """
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    dim = min(arr.shape[1], DIRICHLET_MAX_DIM)
    ks = _dirichlet_frequencies(dim, cutoff)
    angles = np.pi * (arr[:, :dim] @ ks.T)
    feats = np.concatenate([np.cos(angles), np.sin(angles)], axis=1)
    return feats[0] if single else feats


def dirichlet_gram(X: np.ndarray, X2: np.ndarray | None = None, cutoff: int = DIRICHLET_CUTOFF) -> np.ndarray:
    """Gram matrix of the truncated cosine kernel via the explicit expansion."""
    F1 = np.atleast_2d(dirichlet_features(np.atleast_2d(X), cutoff))
    F2 = F1 if X2 is None else np.atleast_2d(dirichlet_features(np.atleast_2d(X2), cutoff))
    return F1 @ F2.T


def rbf_bandwidth(X: np.ndarray) -> float:
    """Mean-pairwise-distance heuristic: gamma^2 = sum_ij ||x_i - x_j||^2 / (2 n^2)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    sq = np.sum((X[:, None, :] - X[None, :, :]) ** 2, axis=-1)
    gamma2 = float(sq.sum()) / (2.0 * X.shape[0] ** 2)
    if gamma2 == 0.0:
        raise ValueError("all inputs identical: zero bandwidth")
    return gamma2


def rbf_gram(X: np.ndarray, X2: np.ndarray | None = None, gamma2: float | None = None) -> np.ndarray:
    """K_ij = exp(-||x_i - x_j||^2 / (2 gamma^2)); bandwidth defaults to the heuristic."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] == 0:
        raise ValueError("empty input")
    if gamma2 is None:
        gamma2 = rbf_bandwidth(X)
    if gamma2 <= 0:
        raise ValueError("bandwidth must be positive")
    Y = X if X2 is None else np.atleast_2d(np.asarray(X2, dtype=np.float64))
    sq = np.sum(X**2, axis=1)[:, None] + np.sum(Y**2, axis=1)[None, :] - 2.0 * X @ Y.T
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-sq / (2.0 * gamma2))


def _kappa0(u: np.ndarray) -> np.ndarray:
    return (np.pi - np.arccos(u)) / np.pi


def _kappa1(u: np.ndarray) -> np.ndarray:
    return (np.sqrt(1.0 - u**2) + u * (np.pi - np.arccos(u))) / np.pi


NTK_DEPTH = 2  # hidden ReLU layers


def ntk_gram(X: np.ndarray, X2: np.ndarray | None = None, depth: int = NTK_DEPTH) -> np.ndarray:
    """Infinite-width tangent kernel of a ReLU net with ``depth`` hidden layers.

    Inputs are normalized to the unit sphere; the arc-cosine recursion uses
    He-style weight variance (unit-diagonal covariances) and no biases.
    Deterministic, no sampling.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = X if X2 is None else np.atleast_2d(np.asarray(X2, dtype=np.float64))
    nx = np.linalg.norm(X, axis=1)
    ny = np.linalg.norm(Y, axis=1)
    if np.any(nx == 0) or np.any(ny == 0):
        raise ValueError("NTK inputs must be nonzero vectors")
    u = np.clip((X / nx[:, None]) @ (Y / ny[:, None]).T, -1.0, 1.0)
    sigma = u
    theta = u
    for _ in range(depth):
        theta = _kappa1(sigma) + theta * _kappa0(sigma)
        sigma = _kappa1(sigma)
    return theta


class Standardizer:
    """Column-wise zero-mean unit-variance scaling fitted on training features."""

    def __init__(self):
        self.mean = None
        self.scale = None

    def fit(self, X: np.ndarray) -> "Standardizer":
        X = np.asarray(X, dtype=np.float64)
        self.mean = X.mean(axis=0)
        std = X.std(axis=0)
        self.scale = np.where(std > 1e-12, std, 1.0)
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.scale

    def fit_transform(self, X: np.ndarray) -> np.ndarray:
        return self.fit(X).transform(X)
