import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from rmppa import bench
from rmppa.diagnostics import reference_saddle_point
from rmppa.solver import SolverParams, validate_params

# (theta, rho, sigma) triples exercised by the theory checks
THEORY_SETS = [(0.5, 1.0, 1.4), (0.0, 1.0, 1.0), (2.0, 1.0, 1.0), (1.0, 0.5, 1.4)]

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_problem():
    return bench.gen_instance(bench.InstanceSpec(m=20, n=50, spikes=3, seed=7))


@pytest.fixture(scope="session")
def small_reference(small_problem):
    return reference_saddle_point(small_problem)


@pytest.fixture(scope="session")
def desk_problem():
    return bench.gen_instance(bench.DESK_SCALE)


def params_for(problem, theta, rho, sigma, r=8.0, s_factor=1.01):
    from rmppa.linops import spectral_norm_sq

    lam = spectral_norm_sq(problem.A)
    return validate_params(SolverParams(theta=theta, rho=rho, r=r, s=s_factor * lam / r,
                                        sigma=sigma, lam_max=lam), problem.A)
