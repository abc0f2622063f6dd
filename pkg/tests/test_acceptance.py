"""Acceptance criteria 1-10. Each test records a pass/fail line that is
printed in the "acceptance criteria" section of the pytest summary."""

import os
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, THEORY_SETS, params_for
from oracles import brute_prox_abs, linearized_alm
from rmppa import bench
from rmppa.bench import AlgorithmConfig, compare_algorithms, gen_instance
from rmppa.diagnostics import DiagnosticsMonitor, gamma_bar, quad_form
from rmppa.errors import ParameterError
from rmppa.linops import spectral_norm_sq
from rmppa.prox import prox_l1
from rmppa.solver import (Iterate, SolverParams, StoppingSpec, preset, run, tuned_params,
                          validate_params)

FULL_SCALE = os.environ.get("RMPPA_FULL_SCALE") == "1"
THEORY_ITERS = 2000


def record(tag, ok, detail):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {tag}: {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def theory_runs(small_problem, small_reference):
    """Criterion 3's runs, shared by criteria 3-5."""
    out = {}
    for theta, rho, sigma in THEORY_SETS:
        params = params_for(small_problem, theta, rho, sigma)
        mon = DiagnosticsMonitor(small_problem, params, small_reference)
        run(small_problem, params,
            StoppingSpec(tol_it=1e-300, tol_eq=1e-300, max_iter=THEORY_ITERS),
            monitor=mon, record_objective=False)
        out[(theta, rho, sigma)] = (params, mon)
    return out


def test_c1_desk_scale_recovery(desk_problem):
    t0 = time.perf_counter()
    params = tuned_params(desk_problem.A, theta=0.5)
    hist = run(desk_problem, params)
    elapsed = time.perf_counter() - t0
    ok = (hist.converged and hist.last.re <= 0.1 and hist.iterations <= 5000
          and elapsed < 10.0)
    record("C1 desk-scale recovery", ok,
           f"{hist.termination}, IT={hist.iterations}, RE={hist.last.re:.4f}, {elapsed:.2f}s "
           "(need converged, RE<=0.1, IT<=5000, <10s)")


@pytest.mark.slow
def test_c2_published_band():
    if not FULL_SCALE:
        ACCEPTANCE_LINES.append("[SKIP] C2 published-count band (full scale): set RMPPA_FULL_SCALE=1")
        pytest.skip("full scale runs need RMPPA_FULL_SCALE=1")
    problem = gen_instance(bench.FULL_SCALE)
    thetas = [-5.0, 0.5, 10.0]
    rows = bench.theta_sweep(problem, thetas)
    parts, ok = [], True
    for row in rows:
        target = bench.PUBLISHED_IT[row.theta]
        it_ok = 0.75 * target <= row.it <= 1.25 * target
        re_ok = row.re is not None and 0.05 <= row.re <= 0.09
        ok = ok and it_ok and re_ok and row.termination == "converged"
        parts.append(f"theta={row.theta:g} IT={row.it} (band {0.75 * target:.0f}-"
                     f"{1.25 * target:.0f}) RE={row.re:.4f}")
    record("C2 published-count band (full scale)", ok, "; ".join(parts))


def test_c3_lyapunov_descent(theory_runs):
    parts, ok = [], True
    for key, (_, mon) in theory_runs.items():
        rep = mon.report
        v = np.array([mon._v_initial] + rep.lyapunov)
        # V(w^{k+1}) - V(w^k) + T_{k+1}, scaled by the allowed slack
        excess = (v[1:] - v[:-1] + np.array(rep.t_form_b)) / (1.0 + v[:-1])
        ok = ok and rep.descent and bool(np.all(excess <= 1e-8)) and len(rep.k) == THEORY_ITERS
        parts.append(f"{key} max scaled excess={excess.max():.1e}")
    record("C3 Lyapunov descent", ok, "; ".join(parts))


def test_c4_t_forms(theory_runs):
    parts, ok = [], True
    for key, (_, mon) in theory_runs.items():
        a = np.array(mon.report.t_form_a)
        b = np.array(mon.report.t_form_b)
        rel = np.abs(a - b) / np.maximum(np.abs(b), 1.0)
        ok = ok and rel.max() <= 1e-8 and b.min() >= 0
        parts.append(f"{key} max_rel={rel.max():.1e} min_b={b.min():.1e}")
    record("C4 T-form identity", ok, "; ".join(parts))


def test_c5_ergodic_bound(theory_runs, small_problem, small_reference):
    parts, ok = [], True
    w0 = Iterate.zeros(small_problem.n, small_problem.m)
    for key, (params, mon) in theory_runs.items():
        rep = mon.report
        gap_ok = min(rep.bound_gap) >= -1e-8 and len(rep.bound_gap) == THEORY_ITERS
        k = np.array(rep.k)
        scaled = (k + 1) * np.array(rep.ergodic_feas)
        # suffix maximum of (t+1)||A x_t - b||: non-increasing, must stay under
        # the corollary feasibility constant after t = 50
        env = np.maximum.accumulate(scaled[::-1])[::-1][k >= 50]
        gbar = gamma_bar(w0, small_reference.x, small_reference.lam, params,
                         small_problem.A, small_problem.b)
        const = gbar / (2 * params.sigma * (np.linalg.norm(small_reference.lam) + 1))
        env_ok = bool(np.all(np.diff(env) <= 0) and env[0] <= const)
        ok = ok and gap_ok and env_ok
        parts.append(f"{key} min_gap={min(rep.bound_gap):.1e} env={env[0]:.2f}<={const:.2f}")
    record("C5 ergodic bound", ok, "; ".join(parts))


def test_c6_positive_definiteness(small_problem):
    rng = np.random.default_rng(6)
    A = small_problem.A
    lam = spectral_norm_sq(A)
    worst = np.inf
    for theta, rho, sigma in THEORY_SETS:
        params = params_for(small_problem, theta, rho, sigma)
        for _ in range(100):
            w = Iterate(rng.standard_normal(small_problem.n), rng.standard_normal(small_problem.m))
            for variant in ("G", "G_tilde"):
                worst = min(worst, quad_form(w, params, A, variant) / (w.stacked() @ w.stacked()))
    bad = SolverParams(theta=0.5, rho=1.0, r=8.0, s=0.99 * lam / 8.0, sigma=1.4, lam_max=lam)
    try:
        validate_params(bad, A)
        rejected = False
    except ParameterError:
        rejected = True
    record("C6 positive definiteness", worst > 0 and rejected,
           f"min Rayleigh quotient {worst:.3e} over 800 draws; rs=0.99L rejected={rejected}")


def test_c7_preset_equivalence(small_problem):
    base = params_for(small_problem, 0.5, 1.0, 1.4)
    lalm = validate_params(preset("linearized_alm", base), small_problem.A)
    hist_x, hist_l = [], []

    class Collect:
        def observe(self, k, w_k, w_tilde, w_next):
            hist_x.append(w_next.x.copy())
            hist_l.append(w_next.lam.copy())

    run(small_problem, lalm, StoppingSpec(tol_it=1e-300, tol_eq=1e-300, max_iter=200),
        monitor=Collect(), record_objective=False)
    xs, ls = linearized_alm(small_problem.A, small_problem.b, lalm.r, lalm.s, 200)
    dev_lalm = max(max(np.max(np.abs(a - b)) for a, b in zip(hist_x, xs)),
                   max(np.max(np.abs(a - b)) for a, b in zip(hist_l, ls)))

    configs = [AlgorithmConfig("P", "p_ppa", -1.0, 1.02), AlgorithmConfig("C", "c_ppa", 1.0, 1.02)]
    p, c = compare_algorithms(small_problem, configs,
                              StoppingSpec(tol_it=1e-300, tol_eq=1e-300, max_iter=200),
                              keep_history=True)
    dev_pc = max(np.max(np.abs(p.history.final.x - c.history.final.x)),
                 np.max(np.abs(np.array(p.eq_err) - np.array(c.eq_err))),
                 np.max(np.abs(np.array(p.lir) - np.array(c.lir))))
    ok = len(hist_x) == 200 and dev_lalm <= 1e-12 and dev_pc <= 1e-12
    record("C7 preset equivalence", ok,
           f"linearized ALM max dev {dev_lalm:.1e}; P-PPA(t=-1) vs C-PPA(1) max dev {dev_pc:.1e}")


def test_c8_prox_oracle():
    rng = np.random.default_rng(8)
    c = rng.uniform(-5, 5, 1000)
    tau = rng.uniform(1e-3, 3, 1000)
    got = np.array([prox_l1(np.array([ci]), ti)[0] for ci, ti in zip(c, tau)])
    want = np.array([brute_prox_abs(ci, ti) for ci, ti in zip(c, tau)])
    err = np.max(np.abs(got - want))
    worst = -np.inf
    for _ in range(1000):
        a, b = rng.normal(0, 3, 8), rng.normal(0, 3, 8)
        t = rng.uniform(1e-3, 3)
        worst = max(worst, np.linalg.norm(prox_l1(a, t) - prox_l1(b, t)) - np.linalg.norm(a - b))
    record("C8 prox oracle", err <= 1e-6 and worst <= 1e-12,
           f"max |prox - brute| = {err:.1e}; max expansion {worst:.1e}")


def test_c9_fixed_point(small_problem, small_reference):
    parts, ok = [], True
    for theta, rho, sigma in THEORY_SETS:
        params = params_for(small_problem, theta, rho, sigma)
        hist = run(small_problem, params, StoppingSpec(max_iter=1), w0=small_reference)
        e = hist.records[0].it_err
        ok = ok and e <= 1e-9
        parts.append(f"{(theta, rho, sigma)} It_err={e:.1e}")
    record("C9 fixed point", ok, "; ".join(parts))


def test_c10_relaxation_ordering(desk_problem):
    rm, m = compare_algorithms(desk_problem, bench.DEFAULT_COMPARISON[:2])
    ok = (rm.termination == m.termination == "converged" and rm.iterations <= m.iterations)
    record("C10 RM-PPA vs M-PPA", ok,
           f"{rm.label} IT={rm.iterations}, {m.label} IT={m.iterations}")
