"""Acceptance suite: one test per exit criterion, each printing a PASS/FAIL
line with the measured values (run with `pytest tests/test_acceptance.py -v -s`).

The heavy fixtures (scaling sweeps, the 13-qubit phase pools) are
module-scoped and shared across criteria; everything is pinned to one seed
and is deterministic end to end.
"""

import time
from dataclasses import replace

import numpy as np
import pytest
from scipy.stats import spearmanr

from qslbench.budget import (
    ResourceBudget,
    estimate_cost,
    estimate_walltime,
    load_rates,
    ssl_split_check,
    validate_budget,
)
from qslbench.datasets import (
    exact_labeled,
    generate_split,
    preprocess_labels,
    randomize_measurements,
    rebalance_upsample,
)
from qslbench.experiment import ExperimentConfig, run_experiment
from qslbench.groundstate import dense_diagonalize, ground_state
from qslbench.hamiltonians import build_hamiltonian, sample_params
from qslbench.metrics import accuracy
from qslbench.mlp import init_params, loss_and_grads
from qslbench.paulis import PauliString, StateVector, expectation
from qslbench.pipeline import ModelConfig, train_model
from qslbench.rng import substream
from qslbench.shadows import ShadowSet, sample_shadow, shadow_expectation, shadow_renyi2

from oracles import enumerate_shadow_distribution, random_state

SEED = 714
THREADS = 2


def _report(criterion: str, ok: bool, detail: str) -> None:
    print(f"\ncriterion {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")


# ---------------------------------------------------------------------------
# shared data

@pytest.fixture(scope="module")
def gspe_sweep():
    """Heisenberg N=8 correlation sweep: ridge + lasso over the desk grid."""
    cfg = ExperimentConfig(
        family="heisenberg", nqubits=8, task="correlation",
        n_grid=(20, 40, 60, 80, 100), m_grid=(64, 128, 256, 512), n_test=200,
        models=(ModelConfig("ridge"), ModelConfig("lasso")),
        seed=SEED, repetitions=5,
    )
    return cfg, run_experiment(cfg, threads=THREADS)


QPC_N = 13
QPC_M_MAX = 512


@pytest.fixture(scope="module")
def qpc13():
    """Rydberg N=13 phase pools: 400 test instances plus five training pools
    (rep 0 holds 200 for the threshold-closure check, reps 1-4 hold 100)."""
    kw = dict(solver_tol=1e-4, threads=THREADS)
    test = generate_split("rydberg", QPC_N, "phase", 400, QPC_M_MAX, SEED,
                          ("test",), "test", **kw)
    pools = [
        generate_split("rydberg", QPC_N, "phase", 200 if rep == 0 else 100,
                       QPC_M_MAX, SEED, ("train", rep), "train", **kw)
        for rep in range(5)
    ]
    return test, pools


# ---------------------------------------------------------------------------

def test_criterion_01_oracle_equivalence():
    """Lanczos matches dense diagonalization across all three families."""
    import warnings

    t0 = time.time()
    worst_energy = 0.0
    worst_fidelity = 1.0
    checked = 0
    for family in ("heisenberg", "tfim", "rydberg"):
        for i in range(100):
            n = 2 + (i % 9)  # cycle N over {2..10}
            params = sample_params(family, n, substream(SEED, "c1", family, i, "p"))
            H = build_hamiltonian(params)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")  # odd-N Heisenberg is degenerate
                gs = ground_state(H, tol=1e-10, rng=substream(SEED, "c1", family, i, "s"))
            evals, ground = dense_diagonalize(H)
            worst_energy = max(worst_energy, abs(gs.energy - evals[0]))
            if evals[1] - evals[0] > 1e-6:  # fidelity only meaningful off degeneracy
                fid = abs(np.vdot(gs.state.amplitudes, ground))
                worst_fidelity = min(worst_fidelity, fid)
            checked += 1
    elapsed = time.time() - t0
    ok = worst_energy <= 1e-8 and worst_fidelity >= 1 - 1e-8 and elapsed < 120
    _report("1", ok, f"{checked} instances, max |dE|={worst_energy:.2e}, "
                     f"min fidelity={worst_fidelity:.10f}, {elapsed:.0f}s")
    assert worst_energy <= 1e-8
    assert worst_fidelity >= 1 - 1e-8
    assert elapsed < 120


def test_criterion_02_shadow_unbiasedness():
    """Enumerated estimator mean equals tr(rho P) for all 2-qubit Paulis."""
    rng = substream(SEED, "c2")
    paulis = [PauliString(a + b) for a in "IXYZ" for b in "IXYZ"][1:]  # skip II
    worst = 0.0
    for _ in range(50):
        amps = random_state(rng, 2)
        state = StateVector(amps)
        outcomes = list(enumerate_shadow_distribution(amps))
        for ps in paulis:
            total = sum(
                p * shadow_expectation(ShadowSet(np.array([c], dtype=np.uint8)), ps)
                for p, c in outcomes
            )
            worst = max(worst, abs(total - expectation(state, ps)))
    ok = worst <= 1e-12
    _report("2", ok, f"50 states x 15 Paulis, max bias {worst:.2e}")
    assert worst <= 1e-12


def test_criterion_03_shadow_concentration():
    """Deviation bound at M=1e4 plus the 4x variance reduction."""
    state = StateVector(random_state(substream(SEED, "c3", "state"), 4))
    M = 10_000
    results = {}
    for ops, w in (("IZII", 1), ("XXII", 2)):
        ps = PauliString(ops)
        exact = expectation(state, ps)
        bound = 5 * 3**w / np.sqrt(M)
        hits = 0
        small = []
        for trial in range(100):
            est = shadow_expectation(sample_shadow(state, M, substream(SEED, "c3", ops, trial)), ps)
            small.append(est)
            if abs(est - exact) <= bound:
                hits += 1
        results[ops] = (hits, np.var(small))
    large = [
        shadow_expectation(sample_shadow(state, 4 * M, substream(SEED, "c3l", t)), PauliString("XXII"))
        for t in range(100)
    ]
    ratio = results["XXII"][1] / np.var(large)
    ok = all(h >= 95 for h, _ in results.values()) and 2.5 <= ratio <= 6.0
    _report("3", ok, f"bound hits w1={results['IZII'][0]}/100 w2={results['XXII'][0]}/100, "
                     f"variance ratio M->4M {ratio:.2f}")
    assert results["IZII"][0] >= 95
    assert results["XXII"][0] >= 95
    assert 2.5 <= ratio <= 6.0


def test_criterion_04_entropy_endpoints(double_singlet):
    """Purity estimator reaches both ends of the two-qubit entropy range."""
    product = StateVector.computational([0, 0, 0, 0])
    prod_vals = [
        shadow_renyi2(sample_shadow(product, 10_000, substream(SEED, "c4p", s)), (1, 2))
        for s in range(5)
    ]
    mixed_vals = [
        shadow_renyi2(sample_shadow(double_singlet, 10_000, substream(SEED, "c4m", s)), (2, 3))
        for s in range(5)
    ]
    ok = np.max(np.abs(prod_vals)) <= 0.1 and np.max(np.abs(np.array(mixed_vals) - 2)) <= 0.15
    _report("4", ok, f"product max |S2|={np.max(np.abs(prod_vals)):.3f}, "
                     f"mixed max |S2-2|={np.max(np.abs(np.array(mixed_vals) - 2)):.3f} (5 seeds)")
    assert np.max(np.abs(prod_vals)) <= 0.1
    assert np.max(np.abs(np.array(mixed_vals) - 2)) <= 0.15


def test_criterion_05_noise_free_regression():
    """Ridge on exact labels at N=8: large-sample error floor."""
    t0 = time.time()
    cfg = ExperimentConfig(
        family="heisenberg", nqubits=8, task="correlation",
        n_grid=(10_000,), m_grid=(0,), n_test=20_000,
        models=(ModelConfig("ridge"),), seed=SEED, repetitions=1, noise_free=True,
    )
    report = run_experiment(cfg, threads=THREADS)
    eps = report.rows[0]["metric"]
    elapsed = time.time() - t0
    ok = eps <= 0.01 and elapsed < 900
    _report("5", ok, f"ridge eps(C)={eps:.6f} (<= 0.01), {elapsed:.0f}s (< 900)")
    assert eps <= 0.01
    assert elapsed < 900


def test_criterion_06_ml_vs_baseline_gap(gspe_sweep):
    """Ridge at (n=100, M=128) beats the classical-shadow readout twofold."""
    _, report = gspe_sweep
    rows = report.select(model="ridge", n=100, M=128)
    ridge = float(np.mean([r["metric"] for r in rows]))
    baseline = float(np.mean([r["baseline"] for r in rows]))
    ok = ridge <= 0.5 * baseline
    _report("6", ok, f"ridge {ridge:.4f} vs CS baseline {baseline:.4f} "
                     f"(ratio {ridge / baseline:.3f} <= 0.5), 5 seeds")
    assert ridge <= 0.5 * baseline


def test_criterion_07_scaling_laws(gspe_sweep, qpc13):
    """Error falls (accuracy rises) with the training size at every M."""
    cfg, report = gspe_sweep
    details = []
    ok = True
    for model in ("ridge", "lasso"):
        for M in cfg.m_grid:
            means = [
                np.mean([r["metric"] for r in report.select(model=model, n=n, M=M)])
                for n in cfg.n_grid
            ]
            rho = spearmanr(cfg.n_grid, means).statistic
            improved = means[-1] < means[0]
            ok &= rho <= -0.6 and improved
            details.append(f"{model}@M={M}: rho={rho:.2f}")
    test, pools = qpc13
    test_lab = exact_labeled(test)
    n_grid = (20, 40, 60, 80, 100)
    m_grid = (64, 128, 256, 512)
    acc = {m: [] for m in m_grid}
    for m in m_grid:
        for n in n_grid:
            vals = []
            for rep, pool in enumerate(pools):
                sub = pool.subset(n, m)
                labeled = rebalance_upsample(
                    preprocess_labels(sub), substream(SEED, "c7-reb", rep, n, m)
                )
                pipe = train_model(ModelConfig("random_forest"), "phase", QPC_N,
                                   labeled, (SEED, "c7", rep, n, m))
                vals.append(accuracy(pipe.predict(test_lab), test_lab.y))
            acc[m].append(float(np.mean(vals)))
    for m in m_grid:
        rho = spearmanr(n_grid, acc[m]).statistic
        improved = acc[m][-1] > acc[m][0]
        ok &= rho >= 0.6 and improved
        details.append(f"rf@M={m}: rho={rho:.2f}")
    _report("7", ok, "; ".join(details))
    for model in ("ridge", "lasso"):
        for M in cfg.m_grid:
            means = [
                np.mean([r["metric"] for r in report.select(model=model, n=n, M=M)])
                for n in cfg.n_grid
            ]
            assert spearmanr(cfg.n_grid, means).statistic <= -0.6
            assert means[-1] < means[0]
    for m in m_grid:
        assert spearmanr(n_grid, acc[m]).statistic >= 0.6
        assert acc[m][-1] > acc[m][0]


def test_criterion_08_qpc_threshold_closure(qpc13):
    """Random forest on the two occupation scores; exact and estimated.

    The first clause demands exactly 100% test accuracy. Because the scores
    vary continuously across the 0.7/0.6 threshold lines, a few test points
    always fall between a true threshold and the nearest training-derived
    split (measured ~1-3% of points), so the clause is stricter than a
    finite training set can guarantee; it is asserted as stated and is
    expected to fail by ~1-2 points at any seed. The estimated-score clause
    passes comfortably.
    """
    test, pools = qpc13
    test_lab = exact_labeled(test)
    exact_train = exact_labeled(pools[0])  # 200 instances
    pipe = train_model(ModelConfig("random_forest_scores"), "phase", QPC_N,
                       exact_train, (SEED, "c8-exact"))
    acc_exact = accuracy(pipe.predict(test_lab), test_lab.y)
    est_train = preprocess_labels(pools[0].subset(200, 256))
    pipe_est = train_model(ModelConfig("random_forest_scores"), "phase", QPC_N,
                           est_train, (SEED, "c8-est"))
    acc_est = accuracy(pipe_est.predict(test_lab), test_lab.y)
    ok = acc_exact == 1.0 and acc_est >= 0.90
    _report("8", ok, f"exact-score accuracy {acc_exact:.4f} (= 1.0 required), "
                     f"M=256 estimate accuracy {acc_est:.4f} (>= 0.90)")
    assert acc_est >= 0.90
    assert acc_exact == 1.0


def test_criterion_09_randomization_direction(qpc13):
    """Real measurement features help QPC; randomized ones do not help GSPE."""
    test, pools = qpc13
    test_real = exact_labeled(test.subset(400, 256))
    test_rand = exact_labeled(
        randomize_measurements(test.subset(400, 256), "bit2", substream(SEED, "c9-tr"))
    )
    gaps = []
    for rep, pool in enumerate(pools):
        sub = pool.subset(100, 256)
        labeled = preprocess_labels(sub)
        rand_payloads = [
            inst.payload
            for inst in randomize_measurements(sub, "bit2", substream(SEED, "c9-r", rep)).instances
        ]
        bal_real = rebalance_upsample(labeled, substream(SEED, "c9-reb", rep))
        bal_rand = rebalance_upsample(
            replace(labeled, payloads=rand_payloads), substream(SEED, "c9-reb", rep)
        )
        pipe_real = train_model(
            ModelConfig("random_forest", use_measurements=True),
            "phase", QPC_N, bal_real, (SEED, "c9a", rep),
        )
        pipe_rand = train_model(
            ModelConfig("random_forest", use_measurements=True, randomized_measurements=True),
            "phase", QPC_N, bal_rand, (SEED, "c9a", rep),
        )
        acc_real = accuracy(pipe_real.predict(test_real), test_real.y)
        acc_rand = accuracy(pipe_rand.predict(test_rand), test_rand.y)
        gaps.append(acc_real - acc_rand)
    qpc_gap = float(np.mean(gaps))

    cfg = ExperimentConfig(
        family="heisenberg", nqubits=8, task="correlation",
        n_grid=(100,), m_grid=(128,), n_test=200,
        models=(ModelConfig("ridge"),
                ModelConfig("ridge", use_measurements=True, randomized_measurements=True)),
        seed=SEED, repetitions=5,
    )
    report = run_experiment(cfg, threads=THREADS)
    ridge = [r["metric"] for r in report.select(model="ridge")]
    rand = [r["metric"] for r in report.select(model="ridge-A-rand")]
    pooled = float(np.sqrt((np.var(ridge, ddof=1) + np.var(rand, ddof=1)) / 2))
    no_better = np.mean(rand) >= np.mean(ridge) - pooled

    ok = qpc_gap >= 0.02 and no_better
    _report("9", ok, f"QPC real-vs-random gap {100 * qpc_gap:.1f} pts (>= 2); GSPE ridge "
                     f"{np.mean(ridge):.4f} vs randomized {np.mean(rand):.4f} "
                     f"(pooled std {pooled:.4f})")
    assert qpc_gap >= 0.02
    assert no_better


def test_criterion_10_budget_ledger():
    ssl_ok = ssl_split_check(100, 1024, 100, 64, 100, 1088).ok
    ssl_bad = ssl_split_check(1, 1, 0, 0, 1, 2)
    budget = ResourceBudget(6400, [("train", 100, 64)])
    over = ResourceBudget(6400, [("train", 100, 64), ("extra", 1, 1)])
    rates = load_rates()
    cost = estimate_cost(rates["IonQ-Forte"], 10**7)
    wall = estimate_walltime(10**7, 1.0)
    days = f"{wall.days:.2f}"
    ok = (
        ssl_ok and not ssl_bad.ok and ssl_bad.mismatch == -1
        and validate_budget(budget).ok
        and not validate_budget(over).ok and validate_budget(over).overage == 1
        and cost == 800_000 and days == "115.74"
    )
    _report("10", ok, f"ssl checks ok, cost(1e7 shots @ IonQ-Forte)={cost} USD, "
                      f"walltime 1e7 s = {days} days")
    assert ok


def test_criterion_11_sweep_determinism(tmp_path):
    """Two identical CLI sweeps produce byte-identical reports."""
    import json

    from qslbench.cli import main

    cfg = {
        "family": "tfim", "nqubits": 6, "task": "correlation",
        "n_grid": [10, 20], "m_grid": [32], "n_test": 20, "seed": SEED,
        "repetitions": 2, "models": [{"name": "ridge"}],
    }
    cfg_path = tmp_path / "sweep.json"
    cfg_path.write_text(json.dumps(cfg))
    assert main(["sweep", "--config", str(cfg_path), "--out", str(tmp_path / "a")]) == 0
    assert main(["sweep", "--config", str(cfg_path), "--out", str(tmp_path / "b")]) == 0
    same_csv = (tmp_path / "a/report.csv").read_bytes() == (tmp_path / "b/report.csv").read_bytes()
    same_json = (tmp_path / "a/report.json").read_bytes() == (tmp_path / "b/report.json").read_bytes()
    _report("11", same_csv and same_json, "two sweep runs byte-identical (csv and json)")
    assert same_csv and same_json


def test_criterion_12_mlp_gradient_check():
    rng = substream(SEED, "c12")
    params = init_params(5, 8, 2, substream(SEED, "c12-init"))
    X = rng.normal(size=(12, 5))
    Y = rng.normal(size=(12, 2))
    _, grads = loss_and_grads(params, X, Y, "regression", lam=0.01)
    coords = [(k, i) for k in ("W1", "b1", "W2", "b2") for i in range(params[k].size)]
    eps = 1e-6
    worst = 0.0
    for pick in rng.choice(len(coords), size=20, replace=False):
        key, idx = coords[pick]
        flat = params[key].reshape(-1)
        orig = flat[idx]
        flat[idx] = orig + eps
        lp, _ = loss_and_grads(params, X, Y, "regression", lam=0.01)
        flat[idx] = orig - eps
        lm, _ = loss_and_grads(params, X, Y, "regression", lam=0.01)
        flat[idx] = orig
        fd = (lp - lm) / (2 * eps)
        analytic = grads[key].reshape(-1)[idx]
        worst = max(worst, abs(fd - analytic) / max(abs(fd), abs(analytic), 1e-8))
    ok = worst < 1e-4
    _report("12", ok, f"20 coordinates, max relative gradient error {worst:.2e}")
    assert worst < 1e-4
