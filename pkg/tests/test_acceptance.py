"""Acceptance criteria 1-10.

Each test records one pass/fail line, printed in the "acceptance criteria"
section at the end of the pytest run.
"""
import math
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import random_instance, record_acceptance, unit_ball
from test_classifier import _grid_min, grid_instance
from simgood.classifier import SimilarityEvaluator, train_l1_classifier, signed_similarity_matrix
from simgood.data import UCI_BREAST
from simgood.goodness import ReasonableSet, bilinear_similarity, stability_bound, stability_constant, v_loss
from simgood.harness import ExperimentConfig, run_experiment
from simgood.kpca import center_gram, gaussian_gram, kpca_fit, kpca_project_raw
from simgood.sllc import (
    SllcConfig,
    rank_one_projection,
    sllc_gradient,
    sllc_objective,
    solve_sllc_full,
    solve_sllc_reduced,
)

BREAST_CANDIDATES = [
    os.environ.get("SIMGOOD_BREAST_PATH", ""),
    str(Path(__file__).parent / "data" / "breast-cancer-wisconsin.data"),
]


def _check(number, passed, detail):
    record_acceptance(number, bool(passed), detail)
    assert passed, detail


@pytest.fixture(scope="module")
def oracle_instances():
    """20 random instances with d <= 8 and N_T <= 40, solved by both solvers."""
    out = []
    t0 = time.perf_counter()
    for seed in range(20):
        T, R = random_instance(1000 + seed)
        rng = np.random.default_rng(seed)
        cfg = SllcConfig(beta=float(10.0 ** rng.integers(-3, 0)), gamma=float(10.0 ** rng.integers(-2, 1)),
                         seed=seed)
        out.append((T, R, cfg, solve_sllc_full(T, R, cfg), solve_sllc_reduced(T, R, cfg)))
    return out, time.perf_counter() - t0


def test_criterion_01_rings_reproduction():
    t0 = time.perf_counter()
    report = run_experiment(ExperimentConfig(n_runs=10, seed=0))
    elapsed = time.perf_counter() - t0
    s = report.summary("sllc-linear")
    ok = s.accuracy == 100.0 and s.sparsity <= 2 and elapsed <= 120
    _check(1, ok, f"rings sllc-linear accuracy {s.accuracy:.2f}, sparsity {s.sparsity:.2f}, {elapsed:.1f}s")


def test_criterion_02_breast_reproduction():
    path = next((p for p in BREAST_CANDIDATES if p and Path(p).is_file()), None)
    if path is None:
        record_acceptance(2, None, "UCI Wisconsin breast file not found (set SIMGOOD_BREAST_PATH); skipped")
        pytest.skip("UCI Wisconsin breast file not available")
    report = run_experiment(ExperimentConfig(dataset=path, data_format=UCI_BREAST, n_runs=10, seed=0))
    lin, knn = report.summary("sllc-linear"), report.summary("sllc-knn")
    ok = lin.accuracy >= 94.5 and lin.sparsity <= 5 and abs(knn.accuracy - lin.accuracy) <= 2
    _check(2, ok, f"breast linear {lin.accuracy:.2f} (sparsity {lin.sparsity:.2f}), 3-NN {knn.accuracy:.2f}")


def test_criterion_03_cross_solver(oracle_instances):
    instances, elapsed = oracle_instances
    worst = max(abs(f.objective_value - r.objective_value) / max(1.0, f.objective_value)
                for _, _, _, f, r in instances)
    ok = worst <= 1e-4 and elapsed <= 30
    _check(3, ok, f"max relative objective gap {worst:.2e} over 20 instances in {elapsed:.1f}s")


def test_criterion_04_rank_one_projection(oracle_instances):
    instances, _ = oracle_instances
    worst = -math.inf
    for T, R, cfg, full, _ in instances:
        P = rank_one_projection(full.A, R)
        worst = max(worst, sllc_objective(P, T, R, cfg.beta, cfg.gamma)
                    - sllc_objective(full.A, T, R, cfg.beta, cfg.gamma))
    _check(4, worst <= 1e-9, f"largest objective increase after projection {worst:.2e}")


def test_criterion_05_gradient_check():
    worst = 0.0
    h = 1e-5
    for seed in range(10):
        T, R = random_instance(500 + seed, n=15, d=3)
        rng = np.random.default_rng(seed)
        A = rng.normal(size=(3, 3))
        beta, gamma, mu = 10.0 ** rng.uniform(-3, 0), 10.0 ** rng.uniform(-1, 0), rng.uniform(0.1, 1.0)
        G = sllc_gradient(A, T, R, beta, gamma, mu)
        num = np.zeros((3, 3))
        for i in range(3):
            for j in range(3):
                E = np.zeros((3, 3))
                E[i, j] = h
                num[i, j] = (sllc_objective(A + E, T, R, beta, gamma, mu)
                             - sllc_objective(A - E, T, R, beta, gamma, mu)) / (2 * h)
        worst = max(worst, np.linalg.norm(G - num) / max(np.linalg.norm(num), 1e-12))
    _check(5, worst <= 1e-5, f"max relative gradient error {worst:.2e} on 10 instances")


def test_criterion_06_l1_grid_oracle():
    K = SimilarityEvaluator.bilinear(np.eye(2))
    worst = 0.0
    for seed in range(5):
        T, L = grid_instance(seed)
        c = train_l1_classifier(K, L, T, 0.1)
        worst = max(worst, abs(c.objective - _grid_min(signed_similarity_matrix(K, L, T), 0.1)))
    _check(6, worst <= 1e-2, f"max |solver - grid| objective difference {worst:.2e} on 5 instances")


def test_criterion_07_kpca_identities():
    worst_rows, worst_gram = 0.0, 0.0
    for seed in range(5):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(int(rng.integers(10, 61)), int(rng.integers(1, 5))))
        m = kpca_fit(X, len(X))
        Kc, _, _ = center_gram(gaussian_gram(X, X, m.sigma))
        Z = kpca_project_raw(m, X)
        worst_rows = max(worst_rows, float(np.max(np.abs(Kc.sum(axis=1)))))
        worst_gram = max(worst_gram, float(np.max(np.abs(Z @ Z.T - Kc))))
    ok = worst_rows <= 1e-8 and worst_gram <= 1e-6
    _check(7, ok, f"max row sum {worst_rows:.1e}, max reconstruction error {worst_gram:.1e}")


def _unit_matrix(rng, d):
    A = rng.normal(size=(d, d))
    return A / np.linalg.norm(A) * rng.uniform(0, 1)


def test_criterion_08_similarity_properties():
    rng = np.random.default_rng(8)
    violations = {"bounded": 0, "lipschitz": 0, "admissible": 0}
    for _ in range(1000):
        d = int(rng.integers(1, 6))
        A, B = _unit_matrix(rng, d), _unit_matrix(rng, d)
        x, z = unit_ball(rng, 2, d)
        kA, kB = bilinear_similarity(A, x, z)[0, 0], bilinear_similarity(B, x, z)[0, 0]
        violations["bounded"] += abs(kA) > 1 + 1e-12
        violations["lipschitz"] += abs(kA - kB) > np.linalg.norm(A - B) + 1e-12
        n_r = int(rng.integers(1, 8))
        R = ReasonableSet(unit_ball(rng, n_r, d), rng.choice([-1, 1], n_r), 1.0)
        R2 = ReasonableSet(unit_ball(rng, n_r, d), rng.choice([-1, 1], n_r), 1.0)
        gamma = float(rng.uniform(0.01, 1.0))
        label = int(rng.choice([-1, 1]))
        lhs = abs(v_loss(A, (x, label), R, gamma) - v_loss(B, (x, label), R2, gamma))
        gA = np.mean(R.y * bilinear_similarity(A, x, R.X)[0])
        gB = np.mean(R2.y * bilinear_similarity(B, x, R2.X)[0])
        violations["admissible"] += lhs > abs(label * gA - label * gB) / gamma + 1e-12
    total = sum(violations.values())
    _check(8, total == 0, "violations in 1000 draws each: " + ", ".join(f"{k}={v}" for k, v in violations.items()))


def test_criterion_09_bound_calculator():
    kappa = stability_constant(1.0, 1.0, 1.0)
    rng = np.random.default_rng(9)
    decreasing = 0
    for _ in range(10):
        beta, gamma = 10.0 ** rng.uniform(-4, 0), 10.0 ** rng.uniform(-3, 0)
        tau, eps, n = rng.uniform(0.1, 1.0), rng.uniform(0, 1), int(rng.integers(10, 10**5))
        b1 = stability_bound(eps, n, beta, gamma, tau, 0.05).bound_value
        b2 = stability_bound(eps, 2 * n, beta, gamma, tau, 0.05).bound_value
        decreasing += b2 < b1
    ok = kappa == 3.0 and decreasing == 10
    _check(9, ok, f"kappa(1,1,1) = {kappa!r}; bound decreased on {decreasing}/10 sweep points")


def test_criterion_10_determinism(tmp_path):
    outputs = []
    for i in range(2):
        out = tmp_path / f"report{i}.tsv"
        res = subprocess.run([sys.executable, "-m", "simgood.cli", "experiment", "--runs", "2", "--seed", "7",
                              "--out", str(out)], capture_output=True)
        assert res.returncode == 0, res.stderr.decode()
        outputs.append((res.stdout, out.read_bytes()))
    ok = outputs[0] == outputs[1] and outputs[0][0] == outputs[0][1]
    _check(10, ok, f"two experiment invocations {'byte-identical' if ok else 'differ'} "
                   f"({len(outputs[0][0])} bytes)")
