"""Command-line interface.

Subcommands: gen (build a dataset), train (fit one model), eval (score a
model on a dataset), sweep (full experiment grid), randomize (measurement
randomization test input), cost (price/walltime of a shot count), report
(convert a JSON report to CSV). Exit codes: 0 success, 2 budget violation,
3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .budget import BudgetViolation, estimate_cost, estimate_walltime, load_rates
from .datasets import (
    GroundStateCache,
    exact_labeled,
    generate_split,
    load_dataset,
    preprocess_labels,
    randomize_measurements,
    save_dataset,
)
from .experiment import ExperimentConfig, MetricsReport, emit_report, run_experiment
from .groundstate import SolverError
from .metrics import evaluate
from .pipeline import ModelConfig, load_pipeline, save_pipeline, train_model
from .rng import substream

EXIT_OK = 0
EXIT_BUDGET = 2
EXIT_SOLVER = 3

log = logging.getLogger(__name__)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", type=str, required=True, help="output path or directory")
    p.add_argument("--threads", type=int, default=1, help="worker processes for dataset generation")


def _load_config(path: str) -> dict:
    return json.loads(Path(path).read_text())


def _cmd_gen(args) -> int:
    cfg = _load_config(args.config)
    seed = args.seed if args.seed is not None else int(cfg["seed"])
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    cache = GroundStateCache(args.cache) if args.cache else None
    from .budget import ResourceBudget

    budget = None
    if cfg.get("budget_total") is not None:
        budget = ResourceBudget(int(cfg["budget_total"]))
    train = generate_split(
        cfg["family"], int(cfg["nqubits"]), cfg["task"], int(cfg["n_train"]),
        int(cfg.get("shots", 0)), seed, ("train", 0), "train",
        float(cfg.get("solver_tol", 1e-8)), int(cfg.get("solver_max_iter", 500)),
        budget, cache, args.threads,
    )
    test = generate_split(
        cfg["family"], int(cfg["nqubits"]), cfg["task"], int(cfg["n_test"]),
        0, seed, ("test",), "test",
        float(cfg.get("solver_tol", 1e-8)), int(cfg.get("solver_max_iter", 500)),
        None, cache, args.threads,
    )
    save_dataset(train, outdir / "train")
    save_dataset(test, outdir / "test")
    print(f"wrote {outdir / 'train'}.{{json,bin}} and {outdir / 'test'}.{{json,bin}}")
    if budget is not None:
        print(f"budget: {budget.spent_shots} of {budget.total_shots} shots spent")
    return EXIT_OK


def _cmd_train(args) -> int:
    ds = load_dataset(args.data)
    labeled = preprocess_labels(ds) if ds.shots > 0 else exact_labeled(ds)
    model_cfg = ModelConfig(args.model, args.use_measurements, False)
    seed = args.seed if args.seed is not None else ds.seed
    pipe = train_model(model_cfg, ds.task, ds.nqubits, labeled, (seed, "cli-train"))
    save_pipeline(pipe, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    pipe = load_pipeline(args.model)
    ds = load_dataset(args.data)
    labeled = exact_labeled(ds)
    pred = pipe.predict(labeled)
    metric = evaluate(ds.task, pred, labeled.y)
    result = {
        "task": ds.task,
        "family": ds.family,
        "nqubits": ds.nqubits,
        "count": ds.count,
        "metric": metric,
    }
    text = json.dumps(result, sort_keys=True, indent=1)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = ExperimentConfig.from_dict(_load_config(args.config))
    if args.seed is not None:
        cfg.seed = args.seed
    cache = GroundStateCache(args.cache) if args.cache else None
    report = run_experiment(cfg, threads=args.threads, cache=cache)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = emit_report(report, outdir / "report.csv", "csv", timing=args.timing)
    json_path = emit_report(report, outdir / "report.json", "json", timing=args.timing)
    print(f"wrote {csv_path} and {json_path}")
    return EXIT_OK


def _cmd_randomize(args) -> int:
    ds = load_dataset(args.data)
    mode = args.mode
    rng = substream(args.seed if args.seed is not None else ds.seed, "randomize-cli")
    out = randomize_measurements(ds, mode, rng)
    save_dataset(out, args.out)
    print(f"wrote {args.out}.json/.bin with {mode}-randomized measurements")
    return EXIT_OK


def _cmd_cost(args) -> int:
    rates = load_rates(args.rates)
    if args.machine not in rates:
        sys.stderr.write(f"unknown machine {args.machine!r}; known: {sorted(rates)}\n")
        return 1
    rate = rates[args.machine]
    result = {"machine": args.machine, "shots": args.shots}
    if rate.price_per_shot is not None:
        result["usd"] = str(estimate_cost(rate, args.shots))
    wt = estimate_walltime(args.shots, args.seconds_per_shot)
    result["seconds"] = wt.seconds
    result["days"] = round(wt.days, 2)
    print(json.dumps(result, sort_keys=True, indent=1))
    return EXIT_OK


def _cmd_report(args) -> int:
    payload = json.loads(Path(args.json).read_text())
    report = MetricsReport()
    for row in payload["rows"]:
        report.add(**row)
    emit_report(report, args.out, "csv", timing="measured")
    print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qslbench")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a train/test dataset pair")
    p.add_argument("--config", required=True, help="JSON file: family, nqubits, task, n_train, shots, n_test, seed, ...")
    p.add_argument("--cache", default=None, help="ground-state cache directory")
    _add_common(p)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("train", help="fit one model on a dataset")
    p.add_argument("--data", required=True, help="dataset stem (without .json/.bin)")
    p.add_argument("--model", required=True)
    p.add_argument("--use-measurements", action="store_true")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="model file (.npz)")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a model against exact labels")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("sweep", help="run a full experiment grid")
    p.add_argument("--config", required=True)
    p.add_argument("--cache", default=None)
    p.add_argument("--timing", choices=("zero", "measured"), default="zero",
                   help="'zero' keeps reports byte-identical across runs")
    _add_common(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("randomize", help="replace measurements with uniform noise")
    p.add_argument("--data", required=True)
    p.add_argument("--mode", choices=("shadow6", "bit2"), required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_randomize)

    p = sub.add_parser("cost", help="price and walltime of a shot count")
    p.add_argument("--machine", required=True)
    p.add_argument("--shots", type=int, required=True)
    p.add_argument("--seconds-per-shot", type=float, default=1.0)
    p.add_argument("--rates", default=None, help="alternative rate table CSV")
    p.set_defaults(func=_cmd_cost)

    p = sub.add_parser("report", help="convert a JSON report to CSV")
    p.add_argument("--json", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BudgetViolation as err:
        sys.stderr.write(f"budget violation: {err}\n")
        return EXIT_BUDGET
    except SolverError as err:
        sys.stderr.write(f"solver failure: {err}\n")
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
