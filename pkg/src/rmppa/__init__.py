"""Relaxed multi-parameterized proximal point algorithm (RM-PPA) for

    min f(x)  subject to  A x = b,  x in X,

with runtime checks of its contraction and ergodic-rate guarantees and a
sparse-recovery benchmark harness.
"""

from .errors import (ConfigError, ConvergenceError, DimensionError, ParameterError,
                     RMPPAError, SubproblemError)
from .linops import make_rng, matvec, normal_sample, spectral_norm_sq
from .prox import AllSpace, Box, CustomObjective, L1Norm, prox_l1, solve_x_subproblem
from .solver import (Iterate, ProblemInstance, RunHistory, SolverParams, StoppingSpec,
                     iterate_once, preset, run, tuned_params, validate_params)

__version__ = "0.1.0"
