"""Acceptance suite: one test per criterion at the default experiment setup.

Each test prints a single ``[criterion N] PASS|FAIL|WARN ...`` line (shown
even without ``-s``) before asserting, so ``pytest -v`` output doubles as
the acceptance report.
"""

import statistics
import warnings

import numpy as np
import pytest

from squintless import (
    PsoParams,
    SgdaParams,
    fpa_layout,
    gain_sq_grid,
    is_feasible,
    run_alg1,
    run_alg2,
    run_pso,
)
from squintless.config import ExperimentConfig
from squintless.harness import bench_runtime
from squintless.verify import (
    audit_closed_form,
    audit_frequency_gradient,
    audit_gradient,
    audit_loewner,
    audit_minorization,
)

SEEDS = range(5)


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail, soft=False):
        status = "PASS" if ok else ("WARN" if soft else "FAIL")
        with capsys.disabled():
            print(f"\n[criterion {n}] {status} {detail}")
    return emit


@pytest.fixture(scope="module")
def setup():
    cfg = ExperimentConfig()
    return cfg, cfg.geometry(), cfg.array(), cfg.grid()


@pytest.fixture(scope="module")
def runs(setup):
    cfg, geom, array, grid = setup
    init = fpa_layout(array)
    alg1 = run_alg1(init, geom, array, grid, cfg.stopping_rule())
    alg2 = [run_alg2(init, geom, array, grid, SgdaParams(seed=s), cfg.stopping_rule()) for s in SEEDS]
    pso = [run_pso(geom, array, grid, PsoParams(seed=s)) for s in SEEDS]
    pso_fpa = [run_pso(geom, array, grid, PsoParams(seed=s, init="fpa")) for s in SEEDS]
    return {"fpa": init, "alg1": alg1, "alg2": alg2, "pso": pso, "pso_fpa": pso_fpa}


def test_criterion_1_gradient_and_hessian(setup, report):
    _, geom, array, grid = setup
    g, h = audit_gradient(geom, array, grid, 100, np.random.default_rng(1))
    ok = g.passed and h.passed
    report(1, ok, f"gradient rel err {g.worst:.2e} (<= 1e-5), Hessian {h.worst:.2e} (<= 1e-4), n=100")
    assert ok


def test_criterion_2_frequency_gradient(setup, report):
    _, geom, array, grid = setup
    r = audit_frequency_gradient(geom, array, grid, 100, np.random.default_rng(2))
    report(2, r.passed, f"frequency gradient rel err {r.worst:.2e} (<= 1e-5), n=100")
    assert r.passed


def test_criterion_3_loewner_bound(setup, report):
    _, geom, array, grid = setup
    r = audit_loewner(geom, array, grid, 100_000, 10, np.random.default_rng(3))
    report(3, r.passed, f"min eig(Hessian - bound) {r.worst:.3e} (>= -1e-8), {r.samples} points, 10 (m, l) pairs")
    assert r.passed and r.samples >= 100_000


def test_criterion_4_minorization(setup, report):
    _, geom, array, grid = setup
    r = audit_minorization(geom, array, grid, 10_000, np.random.default_rng(4))
    report(4, r.passed, f"max(surrogate - h, tightness gap) {r.worst:.2e} (<= 1e-9), {r.samples} pairs")
    assert r.passed and r.samples >= 10_000


def test_criterion_5_closed_form(setup, report):
    _, geom, array, grid = setup
    r = audit_closed_form(geom, array, grid, 1000, np.random.default_rng(5))
    report(5, r.passed, f"closed form vs direct sum, all m: rel err {r.worst:.2e} (<= 1e-9), {r.samples} triples")
    assert r.passed and r.samples >= 1000


def test_criterion_6_alg1_monotone(runs, report):
    s = runs["alg1"]
    drop = float(np.diff(s.objective_trace).min())
    ok = drop >= -1e-9 and s.converged and s.iteration <= 200
    report(6, ok, f"min step {drop:+.2e} (>= -1e-9), converged={s.converged} after {s.iteration} sweeps")
    assert ok


def test_criterion_7_squint_mitigation(setup, runs, report):
    _, geom, array, grid = setup
    M = array.m_count

    def norm(p):
        return float(np.sqrt(gain_sq_grid(p, geom, grid).min())) / M

    fpa = norm(runs["fpa"])
    a1 = norm(runs["alg1"].positions)
    a2 = [norm(s.positions) for s in runs["alg2"]]
    ok = a1 > fpa and all(x > fpa for x in a2)
    report(7, ok, f"min normalized gain: FPA {fpa:.6f}, Alg1 {a1:.6f}, Alg2 {min(a2):.6f}..{max(a2):.6f}")
    assert ok


def test_criterion_8_ranking(runs, report):
    fpa_obj = float(runs["alg1"].objective_trace[0])
    a1 = runs["alg1"].objective
    a2 = statistics.median(s.objective for s in runs["alg2"])
    pso = statistics.median(r.objective for r in runs["pso"])
    pso_fpa = statistics.median(r.objective for r in runs["pso_fpa"])
    hard = a1 > fpa_obj and a2 > fpa_obj
    soft = a2 >= a1 >= pso
    detail = (f"median min g^2 over {len(SEEDS)} seeds: FPA {fpa_obj:.6f}, Alg1 {a1:.6f}, Alg2 {a2:.6f}, "
              f"PSO(random init) {pso:.6f}, PSO(grid init) {pso_fpa:.6f}")
    if hard and not soft:
        report(8, False, detail + " ; hard part (Alg1, Alg2 > FPA) holds, ordering Alg2 >= Alg1 >= PSO does not",
               soft=True)
        warnings.warn("soft ranking Alg2 >= Alg1 >= PSO not met: " + detail)
    else:
        report(8, hard, detail)
    assert hard


def test_criterion_9_runtime_scaling(setup, report):
    cfg = setup[0]
    rows = bench_runtime(cfg, [64, 1024])
    (_, a1_lo, a2_lo), (_, a1_hi, a2_hi) = rows
    r1 = a1_hi / a1_lo
    r2 = max(a2_hi, a2_lo) / min(a2_hi, a2_lo)
    ok = r2 <= 2 and r1 >= 4
    report(9, ok, f"ms/sweep L=64 -> 1024: Alg1 {a1_lo:.1f} -> {a1_hi:.1f} (x{r1:.2f}, >= 4), "
                  f"Alg2 {a2_lo:.1f} -> {a2_hi:.1f} (x{r2:.2f}, <= 2)")
    assert ok


def test_criterion_10_feasibility(setup, runs, report):
    _, _, array, _ = setup
    layouts = [runs["fpa"], *runs["alg1"].layouts]
    for s in runs["alg2"]:
        layouts += s.layouts
    layouts += [r.positions for r in runs["pso"] + runs["pso_fpa"]]
    bad = sum(not is_feasible(p, array) for p in layouts)
    report(10, bad == 0, f"{len(layouts)} emitted layouts audited, {bad} infeasible (eps_feas = {array.eps_feas:.1e} m)")
    assert bad == 0
