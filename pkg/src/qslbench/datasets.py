"""Dataset construction under a measurement budget, plus (de)serialization.

A dataset split holds n instances of one Hamiltonian family. Every
instance carries its parameters, the classical feature vector, exact
(infinite-measurement) labels for its task, and, for training splits, the
finite-measurement payload (shadow snapshots for the regression tasks,
Z-basis bitstrings for phase classification). Estimated labels are always
recomputed from the payload, never stored.

On disk a split is a JSON manifest next to a binary record file with a
versioned magic header.
"""

from __future__ import annotations

import hashlib
import io
import json
import logging
import struct
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .budget import ResourceBudget
from .groundstate import (
    GroundState,
    SolverError,
    exact_correlation,
    exact_renyi2_adjacent,
    exact_phase_label,
    ground_state,
)
from .hamiltonians import (
    build_hamiltonian,
    feature_vector,
    params_from_json,
    params_to_json,
    sample_params,
)
from .paulis import StateVector
from .rng import substream
from .shadows import (
    BitstringSet,
    ShadowSet,
    estimate_phase_scores,
    sample_shadow,
    sample_zbasis,
    shadow_correlation,
    shadow_renyi2,
)

log = logging.getLogger(__name__)

MAGIC = b"QSLD"
FORMAT_VERSION = 1

TASKS = ("correlation", "entropy", "phase")
PHASE_TASK = "phase"
MAX_SOLVER_RETRIES = 3


@dataclass(frozen=True)
class Instance:
    params: object
    x: np.ndarray
    exact: dict  # task -> exact label payload
    payload: object = None  # ShadowSet | BitstringSet | None


@dataclass
class Dataset:
    family: str
    nqubits: int
    task: str
    shots: int  # M; 0 means exact labels only (no payload)
    role: str  # "train" | "test"
    seed: int
    stream: tuple  # substream path prefix used for the instances
    instances: list[Instance] = field(default_factory=list)
    budget: dict | None = None

    @property
    def count(self) -> int:
        return len(self.instances)

    def x_matrix(self) -> np.ndarray:
        return np.array([inst.x for inst in self.instances])

    def subset(self, n: int, m: int | None = None) -> "Dataset":
        """First n instances, optionally truncated to m snapshots each.

        Instance i is a pure function of (seed, stream, i) and snapshots are
        i.i.d., so prefixes are valid smaller datasets.
        """
        if n > self.count:
            raise ValueError(f"cannot take {n} of {self.count} instances")
        insts = self.instances[:n]
        shots = self.shots
        if m is not None and m != self.shots:
            if self.shots == 0:
                raise ValueError("dataset carries no measurements")
            insts = [
                Instance(i.params, i.x, i.exact, i.payload.prefix(m)) for i in insts
            ]
            shots = m
        return Dataset(self.family, self.nqubits, self.task, shots, self.role,
                       self.seed, self.stream, insts, self.budget)


def exact_labels(gs: GroundState, task: str) -> dict:
    if task == "correlation":
        return {"correlation": exact_correlation(gs)}
    if task == "entropy":
        return {"entropy": exact_renyi2_adjacent(gs)}
    if task == "phase":
        lab = exact_phase_label(gs)
        return {"phase": lab.index, "scores": np.array(lab.scores)}
    raise ValueError(f"unknown task {task!r} (expected one of {TASKS})")


class GroundStateCache:
    """Directory cache of solved ground states keyed by (params, solver config)."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.hits = 0
        self.misses = 0

    @staticmethod
    def key(params, tol: float, max_iter: int) -> str:
        blob = f"{params_to_json(params)}|tol={tol!r}|max_iter={max_iter}"
        return hashlib.sha256(blob.encode()).hexdigest()

    def load(self, key: str) -> GroundState | None:
        path = self.root / f"{key}.npz"
        if not path.exists():
            self.misses += 1
            return None
        with np.load(path) as data:
            gs = GroundState(
                float(data["energy"]),
                StateVector(data["amplitudes"]),
                float(data["residual"]),
                float(data["gap"]),
                int(data["iterations"]),
            )
        self.hits += 1
        log.debug("ground-state cache hit %s", key[:12])
        return gs

    def store(self, key: str, gs: GroundState) -> None:
        path = self.root / f"{key}.npz"
        tmp = path.with_suffix(".tmp.npz")
        np.savez(tmp, energy=gs.energy, residual=gs.residual, gap=gs.gap,
                 iterations=gs.iterations, amplitudes=gs.state.amplitudes)
        tmp.replace(path)


def solve_instance(
    family: str,
    nqubits: int,
    task: str,
    shots: int,
    seed: int,
    stream: tuple,
    index: int,
    solver_tol: float = 1e-8,
    solver_max_iter: int = 500,
    cache: GroundStateCache | None = None,
) -> Instance:
    """Draw parameters, solve the ground state, measure.

    A non-converging instance is resampled from a retry substream up to
    MAX_SOLVER_RETRIES times (logged); the last failure propagates.
    """
    for attempt in range(MAX_SOLVER_RETRIES + 1):
        path = (*stream, index) if attempt == 0 else (*stream, index, "retry", attempt)
        params = sample_params(family, nqubits, substream(seed, *path, "params"))
        key = None
        gs = None
        if cache is not None:
            key = cache.key(params, solver_tol, solver_max_iter)
            gs = cache.load(key)
        try:
            if gs is None:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")  # degenerate instances still usable
                    gs = ground_state(
                        build_hamiltonian(params),
                        tol=solver_tol,
                        max_iter=solver_max_iter,
                        rng=substream(seed, *path, "solver"),
                    )
                if cache is not None:
                    cache.store(key, gs)
        except SolverError as err:
            log.warning(
                "solver failed for %s N=%d instance %d attempt %d: %s",
                family, nqubits, index, attempt, err,
            )
            if attempt == MAX_SOLVER_RETRIES:
                raise
            continue
        payload = None
        if shots > 0:
            meas_rng = substream(seed, *path, "measure")
            if task == PHASE_TASK:
                payload = sample_zbasis(gs.state, shots, meas_rng)
            else:
                payload = sample_shadow(gs.state, shots, meas_rng)
        return Instance(params, feature_vector(params), exact_labels(gs, task), payload)
    raise AssertionError("unreachable")


def _solve_star(args):
    return solve_instance(*args)


def generate_split(
    family: str,
    nqubits: int,
    task: str,
    count: int,
    shots: int,
    seed: int,
    stream: tuple,
    role: str,
    solver_tol: float = 1e-8,
    solver_max_iter: int = 500,
    budget: ResourceBudget | None = None,
    cache: GroundStateCache | None = None,
    threads: int = 1,
) -> Dataset:
    """Generate one split; deterministic in (family, N, task, count, shots, seed,
    stream) regardless of thread count. Budget is charged before any work."""
    if budget is not None:
        budget.allocate(f"{role} n={count} M={shots}", count, shots)
    args = [
        (family, nqubits, task, shots, seed, stream, i, solver_tol, solver_max_iter, cache)
        for i in range(count)
    ]
    if threads > 1:
        # processes cannot share the cache object; drop it for workers
        args = [(*a[:9], None) for a in args]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            instances = list(pool.map(_solve_star, args, chunksize=4))
    else:
        instances = [solve_instance(*a) for a in args]
    return Dataset(
        family, nqubits, task, shots, role, seed, stream, instances,
        budget.to_dict() if budget is not None else None,
    )


@dataclass
class LabeledDataset:
    """Supervised arrays derived from a split: (x, y) plus phase extras."""

    task: str
    x: np.ndarray  # (n, d)
    y: np.ndarray  # correlation: (n, N, N); entropy: (n, N-1); phase: (n,) int
    scores: np.ndarray | None = None  # (n, 2) for phase
    payloads: list | None = None  # per-instance measurement payloads (may be None)

    @property
    def count(self) -> int:
        return self.x.shape[0]


def preprocess_labels(ds: Dataset, task: str | None = None) -> LabeledDataset:
    """Turn raw measurements into estimated labels (entirely classical).

    With shots=0 the split carries exact labels and those are returned (the
    infinite-measurement limit). Payload type must match the task.
    """
    task = ds.task if task is None else task
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}")
    xs = ds.x_matrix()
    payloads = [inst.payload for inst in ds.instances]
    if ds.shots == 0:
        return exact_labeled(ds, task)
    first = payloads[0]
    if task == PHASE_TASK and not isinstance(first, BitstringSet):
        raise TypeError("phase task needs Z-basis bitstring payloads")
    if task != PHASE_TASK and not isinstance(first, ShadowSet):
        raise TypeError(f"{task} task needs shadow payloads")
    if task == "correlation":
        y = np.array([shadow_correlation(p) for p in payloads])
    elif task == "entropy":
        n = ds.nqubits
        y = np.array(
            [[shadow_renyi2(p, (i, i + 1)) for i in range(1, n)] for p in payloads]
        )
    else:
        scores = []
        labels = []
        for p in payloads:
            s2, s3, lab = estimate_phase_scores(p)
            scores.append((s2, s3))
            labels.append(lab.index)
        return LabeledDataset(task, xs, np.array(labels), np.array(scores), payloads)
    return LabeledDataset(task, xs, y, None, payloads)


def exact_labeled(ds: Dataset, task: str | None = None) -> LabeledDataset:
    """Exact-oracle labels for a split (test sets, noise-free mode, baselines)."""
    task = ds.task if task is None else task
    xs = ds.x_matrix()
    payloads = [inst.payload for inst in ds.instances]
    if task == PHASE_TASK:
        labels = np.array([inst.exact["phase"] for inst in ds.instances])
        scores = np.array([inst.exact["scores"] for inst in ds.instances])
        return LabeledDataset(task, xs, labels, scores, payloads)
    y = np.array([inst.exact[task] for inst in ds.instances])
    return LabeledDataset(task, xs, y, None, payloads)


def rebalance_upsample(labeled: LabeledDataset, rng) -> LabeledDataset:
    """Upsample minority classes with replacement to the majority count.

    Training splits only; duplicated records reuse their measurements, so
    no additional quantum resources are implied.
    """
    if labeled.task != PHASE_TASK:
        raise ValueError("rebalancing applies to classification labels")
    counts = np.bincount(labeled.y, minlength=3)
    target = counts.max()
    keep = list(range(labeled.count))
    for cls in np.nonzero(counts)[0]:
        members = np.nonzero(labeled.y == cls)[0]
        deficit = target - len(members)
        if deficit > 0:
            keep.extend(rng.choice(members, size=deficit, replace=True).tolist())
    idx = np.array(sorted(keep))
    return LabeledDataset(
        labeled.task,
        labeled.x[idx],
        labeled.y[idx],
        None if labeled.scores is None else labeled.scores[idx],
        None if labeled.payloads is None else [labeled.payloads[i] for i in idx],
    )


def randomize_measurements(ds: Dataset, mode: str, rng) -> Dataset:
    """Replace every measurement record with uniform noise of the same shape.

    mode "shadow6" redraws snapshot bytes from {0..5}; mode "bit2" redraws
    bits from {0,1}. Parameters and exact labels are untouched.
    """
    if ds.shots == 0:
        raise ValueError("dataset carries no measurements to randomize")
    out = []
    for inst in ds.instances:
        if mode == "shadow6":
            if not isinstance(inst.payload, ShadowSet):
                raise TypeError("shadow6 mode needs shadow payloads")
            payload = ShadowSet(
                rng.integers(0, 6, size=inst.payload.codes.shape, dtype=np.uint8)
            )
        elif mode == "bit2":
            if not isinstance(inst.payload, BitstringSet):
                raise TypeError("bit2 mode needs bitstring payloads")
            payload = BitstringSet(
                rng.integers(0, 2, size=inst.payload.bits.shape, dtype=np.uint8)
            )
        else:
            raise ValueError(f"unknown randomization mode {mode!r}")
        out.append(Instance(inst.params, inst.x, inst.exact, payload))
    return Dataset(ds.family, ds.nqubits, ds.task, ds.shots, ds.role, ds.seed,
                   ds.stream, out, ds.budget)


# ---------------------------------------------------------------------------
# on-disk format

def _label_block(inst: Instance, task: str) -> bytes:
    if task == "correlation":
        return inst.exact["correlation"].astype("<f8").tobytes()
    if task == "entropy":
        return inst.exact["entropy"].astype("<f8").tobytes()
    scores = np.asarray(inst.exact["scores"], dtype="<f8")
    return struct.pack("<B", int(inst.exact["phase"])) + scores.tobytes()


def _payload_block(inst: Instance) -> bytes:
    if inst.payload is None:
        return b""
    if isinstance(inst.payload, ShadowSet):
        return inst.payload.codes.tobytes()
    return np.packbits(inst.payload.bits, axis=1).tobytes()


def save_dataset(ds: Dataset, stem: str | Path) -> tuple[Path, Path]:
    """Write <stem>.json (manifest) and <stem>.bin (records); byte-deterministic."""
    stem = Path(stem)
    manifest = {
        "format": MAGIC.decode(),
        "version": FORMAT_VERSION,
        "family": ds.family,
        "nqubits": ds.nqubits,
        "task": ds.task,
        "shots": ds.shots,
        "role": ds.role,
        "seed": ds.seed,
        "stream": list(ds.stream),
        "count": ds.count,
        "budget": ds.budget,
        "params": [params_to_json(inst.params) for inst in ds.instances],
        "payload_encoding": (
            "none" if ds.shots == 0
            else "zbasis-packed" if ds.task == PHASE_TASK
            else "shadow-bytes"
        ),
    }
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", FORMAT_VERSION))
    for inst in ds.instances:
        buf.write(inst.x.astype("<f8").tobytes())
        buf.write(_label_block(inst, ds.task))
        buf.write(_payload_block(inst))
    json_path = stem.with_suffix(".json")
    bin_path = stem.with_suffix(".bin")
    json_path.write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n")
    bin_path.write_bytes(buf.getvalue())
    return json_path, bin_path


def load_dataset(stem: str | Path) -> Dataset:
    stem = Path(stem)
    manifest = json.loads(stem.with_suffix(".json").read_text())
    if manifest.get("format") != MAGIC.decode():
        raise ValueError("not a dataset manifest")
    if manifest["version"] != FORMAT_VERSION:
        raise ValueError(f"unsupported dataset version {manifest['version']}")
    raw = stem.with_suffix(".bin").read_bytes()
    if raw[:4] != MAGIC:
        raise ValueError("bad magic in record file")
    if struct.unpack("<I", raw[4:8])[0] != FORMAT_VERSION:
        raise ValueError("record file version mismatch")
    off = 8
    n_qubits = manifest["nqubits"]
    task = manifest["task"]
    shots = manifest["shots"]
    instances = []
    for text in manifest["params"]:
        params = params_from_json(text)
        x = feature_vector(params)
        d = x.size
        got = np.frombuffer(raw, dtype="<f8", count=d, offset=off)
        if not np.array_equal(got, x):
            raise ValueError("record parameters disagree with manifest")
        off += 8 * d
        if task == "correlation":
            C = np.frombuffer(raw, dtype="<f8", count=n_qubits**2, offset=off)
            exact = {"correlation": C.reshape(n_qubits, n_qubits)}
            off += 8 * n_qubits**2
        elif task == "entropy":
            S = np.frombuffer(raw, dtype="<f8", count=n_qubits - 1, offset=off)
            exact = {"entropy": S}
            off += 8 * (n_qubits - 1)
        else:
            label = raw[off]
            off += 1
            scores = np.frombuffer(raw, dtype="<f8", count=2, offset=off)
            off += 16
            exact = {"phase": int(label), "scores": scores}
        payload = None
        if shots > 0:
            if task == PHASE_TASK:
                row_bytes = (n_qubits + 7) // 8
                packed = np.frombuffer(
                    raw, dtype=np.uint8, count=shots * row_bytes, offset=off
                ).reshape(shots, row_bytes)
                bits = np.unpackbits(packed, axis=1)[:, :n_qubits]
                payload = BitstringSet(bits)
                off += shots * row_bytes
            else:
                codes = np.frombuffer(
                    raw, dtype=np.uint8, count=shots * n_qubits, offset=off
                ).reshape(shots, n_qubits)
                payload = ShadowSet(codes)
                off += shots * n_qubits
        instances.append(Instance(params, x, exact, payload))
    if off != len(raw):
        raise ValueError(f"trailing bytes in record file ({len(raw) - off})")
    return Dataset(
        manifest["family"], n_qubits, task, shots, manifest["role"],
        manifest["seed"], tuple(manifest["stream"]), instances, manifest["budget"],
    )
