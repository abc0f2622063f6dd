import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from conftest import THEORY_SETS, params_for
from oracles import linearized_alm
from rmppa.errors import ParameterError
from rmppa.prox import prox_l1
from rmppa.solver import (Iterate, ProblemInstance, SolverParams, StoppingSpec, check_stop,
                          iterate_once, lambda_tilde_update, preset, relax_step, run,
                          tuned_params, validate_params)


def test_validate_tuned_params(small_problem):
    params = tuned_params(small_problem.A)
    assert params.validated
    assert params.r == 8.0
    assert params.r * params.s == pytest.approx(1.01 * params.lam_max)


def test_validate_rejects_boundary(small_problem):
    lam = tuned_params(small_problem.A).lam_max
    with pytest.raises(ParameterError, match="r\\*s > lambda_max"):
        validate_params(SolverParams(r=8.0, s=lam / 8.0, lam_max=lam), small_problem.A)


@pytest.mark.parametrize("kwargs, pattern", [
    ({"rho": 1.5}, "rho <= 1"),
    ({"sigma": 2.0}, "sigma"),
    ({"sigma": 0.0}, "sigma"),
    ({"r": -1.0}, "r > 0"),
    ({"s": 0.0}, "s > 0"),
])
def test_validate_rejects_region_violations(small_problem, kwargs, pattern):
    base = tuned_params(small_problem.A)
    with pytest.raises(ParameterError, match=pattern):
        validate_params(dataclasses.replace(base, validated=False, **kwargs), small_problem.A)


def test_lambda_update_theta_one_ignores_x_k(small_problem, rng):
    params = params_for(small_problem, 1.0, 1.0, 1.0)
    x_tilde, lam = rng.standard_normal(small_problem.n), rng.standard_normal(small_problem.m)
    a = lambda_tilde_update(small_problem, params, rng.standard_normal(small_problem.n), x_tilde, lam)
    b = lambda_tilde_update(small_problem, params, rng.standard_normal(small_problem.n), x_tilde, lam)
    assert np.array_equal(a, b)
    assert a == pytest.approx(lam - (small_problem.A @ x_tilde - small_problem.b) / params.s)


def test_lambda_update_theta_zero_ignores_x_tilde(small_problem, rng):
    params = params_for(small_problem, 0.0, 1.0, 1.0)
    x_k, lam = rng.standard_normal(small_problem.n), rng.standard_normal(small_problem.m)
    a = lambda_tilde_update(small_problem, params, x_k, rng.standard_normal(small_problem.n), lam)
    b = lambda_tilde_update(small_problem, params, x_k, rng.standard_normal(small_problem.n), lam)
    assert np.array_equal(a, b)


def test_lambda_update_feasible_points_keep_lambda(rng):
    A = np.array([[1.0, 1.0]])
    problem = ProblemInstance(A=A, b=np.array([1.0]))
    params = params_for(problem, 0.7, 1.0, 1.0)
    lam = np.array([0.3])
    out = lambda_tilde_update(problem, params, np.array([0.2, 0.8]), np.array([1.5, -0.5]), lam)
    assert out == pytest.approx(lam, abs=1e-15)


def test_relax_step_cases():
    w = Iterate(np.array([1.0, 2.0]), np.array([-3.0]))
    wt = Iterate(np.array([0.5, -1.0]), np.array([4.0]))
    one = relax_step(w, wt, 1.0)
    assert np.array_equal(one.x, wt.x) and np.array_equal(one.lam, wt.lam)
    same = relax_step(w, w, 1.7)
    assert same.x == pytest.approx(w.x) and same.lam == pytest.approx(w.lam)
    out = relax_step(Iterate.zeros(3, 2), Iterate(np.ones(3), np.ones(2)), 1.4)
    assert out.x == pytest.approx(np.full(3, 1.4)) and out.lam == pytest.approx(np.full(2, 1.4))
    with pytest.raises(ParameterError):
        relax_step(w, wt, 2.0)


def test_check_stop():
    spec = StoppingSpec()
    assert check_stop(0.0, 0.0, spec)
    assert check_stop(9.98e-5, 8.62e-5, spec)
    assert not check_stop(2e-4, 0.0, spec)
    assert not check_stop(0.0, 2e-4, spec)


def test_single_step_by_hand():
    # A = [1 1], b = 1, theta = rho = sigma = 1, r = 2, s = 1, from zero.
    # c = (1/2) A^T (0 - (0 - 1)) = (0.5, 0.5); prox with tau = 1/2 gives 0;
    # lambda~ = 0 - (A 0 - 1) = 1. rs = 2 equals lambda_max here, so the
    # params are marked valid by hand for this boundary trace.
    problem = ProblemInstance(A=np.array([[1.0, 1.0]]), b=np.array([1.0]))
    params = SolverParams(theta=1.0, rho=1.0, r=2.0, s=1.0, sigma=1.0, lam_max=2.0, validated=True)
    w_tilde, w_next = iterate_once(problem, params, Iterate.zeros(2, 1))
    assert np.array_equal(w_tilde.x, [0.0, 0.0])
    assert np.array_equal(w_tilde.lam, [1.0])
    assert np.array_equal(w_next.x, w_tilde.x) and np.array_equal(w_next.lam, w_tilde.lam)
    assert np.array_equal(prox_l1(np.array([0.5, 0.5]), 0.5), [0.0, 0.0])


def test_iterate_requires_validation(small_problem):
    with pytest.raises(ParameterError):
        iterate_once(small_problem, SolverParams(), Iterate.zeros(small_problem.n, small_problem.m))


@pytest.mark.parametrize("theta, rho, sigma", THEORY_SETS)
def test_fixed_point(small_problem, small_reference, theta, rho, sigma):
    params = params_for(small_problem, theta, rho, sigma)
    w_tilde, w_next = iterate_once(small_problem, params, small_reference)
    assert w_tilde.x == pytest.approx(small_reference.x, abs=1e-10)
    assert w_tilde.lam == pytest.approx(small_reference.lam, abs=1e-10)
    assert w_next.x == pytest.approx(small_reference.x, abs=1e-10)


def test_sigma_one_relaxed_equals_tilde(small_problem):
    params = params_for(small_problem, 0.5, 1.0, 1.0)
    w = Iterate.zeros(small_problem.n, small_problem.m)
    for _ in range(20):
        w_tilde, w_next = iterate_once(small_problem, params, w)
        assert np.array_equal(w_next.x, w_tilde.x) and np.array_equal(w_next.lam, w_tilde.lam)
        w = w_next


def test_run_max_iter(small_problem):
    params = params_for(small_problem, 0.5, 1.0, 1.4)
    hist = run(small_problem, params, StoppingSpec(max_iter=3))
    assert len(hist.records) == 3
    assert hist.iterations == 3
    assert hist.termination == "max_iter"
    assert [r.k for r in hist.records] == [1, 2, 3]


def test_run_desk_scale(desk_problem):
    params = tuned_params(desk_problem.A)
    hist = run(desk_problem, params)
    assert hist.termination == "converged"
    assert hist.last.re <= 0.1
    assert hist.last.it_err <= 1e-4 and hist.last.eq_err <= 1e-4


def test_run_deterministic(small_problem):
    params = params_for(small_problem, 0.5, 1.0, 1.4)
    a = run(small_problem, params)
    b = run(small_problem, params)
    assert a.iterations == b.iterations
    assert np.array_equal(a.final.x, b.final.x)


def test_run_zero_b_flagged():
    problem = ProblemInstance(A=np.array([[1.0, 2.0]]), b=np.zeros(1))
    params = params_for(problem, 0.5, 1.0, 1.0)
    hist = run(problem, params, StoppingSpec(max_iter=5))
    assert any("b_zero" in f for f in hist.flags)


@settings(deadline=None, max_examples=10)
@given(st.integers(0, 1000))
def test_row_permutation_invariance(small_problem, seed):
    perm = np.random.default_rng(seed).permutation(small_problem.m)
    permuted = ProblemInstance(A=small_problem.A[perm], b=small_problem.b[perm])
    params = params_for(small_problem, 0.5, 1.0, 1.4)
    w, wp = Iterate.zeros(50, 20), Iterate.zeros(50, 20)
    for _ in range(50):
        _, w = iterate_once(small_problem, params, w)
        _, wp = iterate_once(permuted, params, wp)
        assert wp.x == pytest.approx(w.x, abs=1e-12)
        assert wp.lam == pytest.approx(w.lam[perm], abs=1e-12)


def test_presets():
    base = SolverParams(theta=0.5, rho=1.0, r=8.0, s=0.3, sigma=1.4)
    assert preset("rm_ppa", base) == base
    assert preset("m_ppa", base).sigma == 1.0
    p = preset("p_ppa", base, -1.0)
    assert (p.theta, p.rho, p.sigma) == (0.0, 1.0, 1.0)
    c = preset("c_ppa", base, 1.8)
    assert (c.theta, c.rho, c.sigma) == (0.0, 1.0, 1.8)
    lin = preset("linearized_alm", base)
    assert (lin.theta, lin.rho, lin.sigma, lin.r, lin.s) == (1.0, 1.0, 1.0, 8.0, 0.3)
    with pytest.raises(ValueError, match="valid presets"):
        preset("admm", base)


def test_linearized_alm_preset_matches_direct_scheme(small_problem):
    params = preset("linearized_alm", params_for(small_problem, 0.5, 1.0, 1.4))
    xs, lams = linearized_alm(small_problem.A, small_problem.b, params.r, params.s, 200)
    w = Iterate.zeros(small_problem.n, small_problem.m)
    for x_ref, lam_ref in zip(xs, lams):
        _, w = iterate_once(small_problem, params, w)
        assert w.x == pytest.approx(x_ref, abs=1e-12)
        assert w.lam == pytest.approx(lam_ref, abs=1e-12)
