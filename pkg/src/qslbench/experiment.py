"""End-to-end experiment runner: datasets -> labels -> models -> metrics.

A run sweeps a grid of (training size n, snapshots M) cells over several
repetitions. Training pools are nested (instance i of a repetition is
shared by every n >= i) and measured once at the largest M, with smaller
cells taking snapshot prefixes, so a sweep costs one pool per repetition.
Test splits carry exact labels and are shared across repetitions.

Models train on estimated labels; the baseline value reported with each
row is the error of those estimated labels themselves against the exact
ones (the no-learner classical-shadow readout). Randomized-measurement
model variants replace only the measurement-derived feature block with
uniform noise; labels stay tied to the real measurements.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .budget import BudgetViolation, ResourceBudget, ssl_split_check
from .datasets import (
    GroundStateCache,
    exact_labeled,
    generate_split,
    preprocess_labels,
    randomize_measurements,
    rebalance_upsample,
)
from .metrics import evaluate
from .pipeline import (
    ModelConfig,
    PHASE_MODELS,
    REGRESSION_MODELS,
    train_model,
)
from .rng import substream

REPORT_COLUMNS = (
    "model", "family", "N", "task", "n", "M", "rep", "metric", "baseline", "seed", "seconds",
)


@dataclass
class ExperimentConfig:
    family: str
    nqubits: int
    task: str
    n_grid: tuple[int, ...]
    m_grid: tuple[int, ...]
    n_test: int
    models: tuple[ModelConfig, ...]
    seed: int
    repetitions: int = 5
    noise_free: bool = False
    budget_total: int | None = None  # per-cell cap on n*M
    ssl_split: tuple[int, int, int, int] | None = None  # (n_pre, M_pre, n_sft, M_sft)
    solver_tol: float = 1e-8
    solver_max_iter: int = 500
    rebalance: bool = True  # phase task only

    def __post_init__(self):
        if min(self.n_grid) < 1 or self.n_test < 1:
            raise ValueError("n and n_test must be at least 1")
        if not self.noise_free and min(self.m_grid) < 1:
            raise ValueError("M must be at least 1 unless noise_free")
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        allowed = PHASE_MODELS if self.task == "phase" else REGRESSION_MODELS
        for m in self.models:
            if m.name not in allowed:
                raise ValueError(f"model {m.name!r} does not support task {self.task!r}")
            if m.randomized_measurements and self.noise_free:
                raise ValueError("randomized-measurement variants need measurements")

    @classmethod
    def from_dict(cls, payload: dict) -> "ExperimentConfig":
        models = tuple(
            ModelConfig(
                m["name"],
                bool(m.get("use_measurements", False)),
                bool(m.get("randomized_measurements", False)),
            )
            for m in payload["models"]
        )
        return cls(
            family=payload["family"],
            nqubits=int(payload["nqubits"]),
            task=payload["task"],
            n_grid=tuple(int(v) for v in payload["n_grid"]),
            m_grid=tuple(
                int(v)
                for v in payload.get("m_grid", [0] if payload.get("noise_free") else [64])
            ),
            n_test=int(payload["n_test"]),
            models=models,
            seed=int(payload["seed"]),
            repetitions=int(payload.get("repetitions", 5)),
            noise_free=bool(payload.get("noise_free", False)),
            budget_total=payload.get("budget_total"),
            ssl_split=tuple(payload["ssl_split"]) if payload.get("ssl_split") else None,
            solver_tol=float(payload.get("solver_tol", 1e-8)),
            solver_max_iter=int(payload.get("solver_max_iter", 500)),
            rebalance=bool(payload.get("rebalance", True)),
        )


@dataclass
class MetricsReport:
    rows: list[dict] = field(default_factory=list)

    def add(self, **row) -> None:
        self.rows.append(row)

    def sorted_rows(self) -> list[dict]:
        return sorted(self.rows, key=lambda r: (r["model"], r["n"], r["M"], r["rep"]))

    def aggregates(self) -> list[dict]:
        """Mean/std of the metric per (model, n, M) across repetitions."""
        groups: dict[tuple, list[float]] = {}
        meta: dict[tuple, dict] = {}
        for r in self.sorted_rows():
            key = (r["model"], r["n"], r["M"])
            groups.setdefault(key, []).append(r["metric"])
            meta[key] = {k: r[k] for k in ("model", "family", "N", "task", "n", "M")}
        out = []
        for key, vals in groups.items():
            entry = dict(meta[key])
            entry["mean"] = float(np.mean(vals))
            entry["std"] = float(np.std(vals))
            entry["reps"] = len(vals)
            out.append(entry)
        return out

    def select(self, **filters) -> list[dict]:
        return [r for r in self.sorted_rows() if all(r[k] == v for k, v in filters.items())]


def emit_report(report: MetricsReport, path: str | Path, fmt: str = "csv",
                timing: str = "zero") -> Path:
    """Write the report. With timing="zero" (the default, and what the CLI
    uses) the bytes are a pure function of (config, seed); measured wall
    times are opt-in because they break run-to-run byte identity."""
    path = Path(path)
    rows = report.sorted_rows()
    if timing not in ("zero", "measured"):
        raise ValueError("timing must be 'zero' or 'measured'")

    def seconds_of(row):
        return 0.0 if timing == "zero" else row["seconds"]

    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for r in rows:
            writer.writerow([
                r["model"], r["family"], r["N"], r["task"], r["n"], r["M"],
                r["rep"], repr(float(r["metric"])), repr(float(r["baseline"])),
                r["seed"], repr(float(seconds_of(r))),
            ])
        path.write_text(buf.getvalue())
    elif fmt == "json":
        payload = {
            "rows": [dict(r, seconds=seconds_of(r)) for r in rows],
            "aggregates": report.aggregates(),
        }
        path.write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return path


def read_report_csv(path: str | Path) -> MetricsReport:
    report = MetricsReport()
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            report.add(
                model=row["model"], family=row["family"], N=int(row["N"]),
                task=row["task"], n=int(row["n"]), M=int(row["M"]),
                rep=int(row["rep"]), metric=float(row["metric"]),
                baseline=float(row["baseline"]), seed=int(row["seed"]),
                seconds=float(row["seconds"]),
            )
    return report


def fit_predict(model_cfg, task, nqubits, train, test, stream_key):
    """Convenience wrapper: train a pipeline and predict the test split."""
    return train_model(model_cfg, task, nqubits, train, stream_key).predict(test)


def run_experiment(cfg: ExperimentConfig, threads: int = 1,
                   cache: GroundStateCache | None = None) -> MetricsReport:
    """Run the full grid; deterministic given (cfg, seed) for any thread count.

    Raises BudgetViolation when a cell exceeds the per-cell shot cap or the
    configured SSL split does not balance a cell's n*M.
    """
    if cfg.ssl_split is not None:
        n_pre, m_pre, n_sft, m_sft = cfg.ssl_split
        for n in cfg.n_grid:
            for m in cfg.m_grid:
                check = ssl_split_check(n_pre, m_pre, n_sft, m_sft, n, m)
                if not check.ok:
                    raise BudgetViolation(message=(
                        f"SSL split {cfg.ssl_split} does not balance n*M for cell "
                        f"(n={n}, M={m}): mismatch {check.mismatch}"
                    ))
    max_n = max(cfg.n_grid)
    max_m = 0 if cfg.noise_free else max(cfg.m_grid)
    if cfg.budget_total is not None and not cfg.noise_free:
        for n in cfg.n_grid:
            for m in cfg.m_grid:
                probe = ResourceBudget(cfg.budget_total)
                probe.allocate(f"cell n={n} M={m}", n, m)  # raises on violation

    # models with measurement features need payloads on the test inputs too;
    # test labels are always the exact oracles and the training budget is not
    # charged for them
    needs_meas = any(m.use_measurements for m in cfg.models)
    test = generate_split(
        cfg.family, cfg.nqubits, cfg.task, cfg.n_test,
        max_m if needs_meas else 0, cfg.seed, ("test",),
        "test", cfg.solver_tol, cfg.solver_max_iter, None, cache, threads,
    )

    def test_view(m: int, randomized: bool):
        view = test
        if needs_meas and not cfg.noise_free and m != test.shots:
            view = test.subset(cfg.n_test, m)
        if randomized:
            mode = "bit2" if cfg.task == "phase" else "shadow6"
            view = randomize_measurements(
                view, mode, substream(cfg.seed, "randomize-test", m)
            )
        return exact_labeled(view)

    test_labeled = test_view(max_m, False)

    needs_randomized = any(m.randomized_measurements for m in cfg.models)
    report = MetricsReport()
    for rep in range(cfg.repetitions):
        pool = generate_split(
            cfg.family, cfg.nqubits, cfg.task, max_n, max_m, cfg.seed,
            ("train", rep), "train", cfg.solver_tol, cfg.solver_max_iter,
            None, cache, threads,
        )
        for n in cfg.n_grid:
            for m in cfg.m_grid:
                subset = pool.subset(n, None if cfg.noise_free else m)
                train_labeled = (
                    exact_labeled(subset) if cfg.noise_free else preprocess_labels(subset)
                )
                exact_train = exact_labeled(subset)
                baseline = evaluate(cfg.task, train_labeled.y, exact_train.y)
                randomized_payloads = None
                if needs_randomized:
                    mode = "bit2" if cfg.task == "phase" else "shadow6"
                    rand_ds = randomize_measurements(
                        subset, mode, substream(cfg.seed, "randomize", rep, n, m)
                    )
                    randomized_payloads = [inst.payload for inst in rand_ds.instances]
                for model_cfg in cfg.models:
                    train_data = train_labeled
                    if model_cfg.randomized_measurements:
                        # noise features, real labels
                        train_data = replace(train_labeled, payloads=randomized_payloads)
                    if cfg.task == "phase" and cfg.rebalance:
                        # same substream either way: labels agree, so the
                        # upsampled indices agree between real and randomized
                        train_data = rebalance_upsample(
                            train_data, substream(cfg.seed, "rebalance", rep, n, m)
                        )
                    test_data = test_labeled
                    if model_cfg.use_measurements:
                        test_data = test_view(m, model_cfg.randomized_measurements)
                    t0 = time.perf_counter()
                    pred = fit_predict(
                        model_cfg, cfg.task, cfg.nqubits, train_data, test_data,
                        (cfg.seed, "fit", model_cfg.label, rep, n, m),
                    )
                    metric = evaluate(cfg.task, pred, test_labeled.y)
                    seconds = time.perf_counter() - t0
                    report.add(
                        model=model_cfg.label, family=cfg.family, N=cfg.nqubits,
                        task=cfg.task, n=n, M=m, rep=rep, metric=metric,
                        baseline=baseline, seed=cfg.seed, seconds=seconds,
                    )
    return report
