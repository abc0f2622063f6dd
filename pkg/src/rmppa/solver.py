"""The relaxed multi-parameterized proximal point iteration.

One step from ``w_k = (x_k, lambda_k)``:

1. ``x~ = argmin_X f(x) + (r/2)||x - c_k||^2 + ((rho-1)/(2s))||A(x - x_k)||^2``
2. ``lambda~ = lambda_k - (1/s)[theta (A x~ - b) + (1 - theta)(A x_k - b)]``
3. ``w_{k+1} = (1 - sigma) w_k + sigma w~``

Convergence needs ``rho <= 1``, ``sigma in (0, 2)`` and
``r s > lambda_max(A^T A)``.
"""

import dataclasses
import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionError, ParameterError, RMPPAError
from .linops import as_matrix, as_vector, spectral_norm_sq
from .prox import AllSpace, L1Norm, solve_x_subproblem

__all__ = [
    "SolverParams",
    "ProblemInstance",
    "Iterate",
    "StoppingSpec",
    "Record",
    "RunHistory",
    "PRESETS",
    "validate_params",
    "tuned_params",
    "preset",
    "lambda_tilde_update",
    "relax_step",
    "iteration_errors",
    "check_stop",
    "iterate_once",
    "run",
]

logger = logging.getLogger(__name__)

PRESETS = ("rm_ppa", "m_ppa", "c_ppa", "p_ppa", "linearized_alm")


@dataclass(frozen=True)
class SolverParams:
    theta: float = 0.5
    rho: float = 1.0
    r: float = 8.0
    s: float = 1.0
    sigma: float = 1.4
    lam_max: Optional[float] = None
    validated: bool = False


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """``min f(x)  s.t.  A x = b, x in X`` plus optional reference data.

    ``x_orig`` is a ground-truth signal used for the recovery error and
    ``w_ref`` an ``Iterate`` close to a saddle point, used by diagnostics.
    """

    A: np.ndarray
    b: np.ndarray
    objective: object = field(default_factory=L1Norm)
    feasible_set: object = field(default_factory=AllSpace)
    x_orig: Optional[np.ndarray] = None
    w_ref: Optional["Iterate"] = None

    def __post_init__(self):
        A = as_matrix(self.A)
        b = as_vector(self.b)
        if A.shape[0] != b.shape[0]:
            raise DimensionError(f"A has {A.shape[0]} rows but b has dim {b.shape[0]}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        if self.x_orig is not None:
            object.__setattr__(self, "x_orig", as_vector(self.x_orig, A.shape[1]))

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.A.shape[1]


@dataclass(frozen=True, eq=False)
class Iterate:
    x: np.ndarray
    lam: np.ndarray

    @classmethod
    def zeros(cls, n, m):
        return cls(np.zeros(n), np.zeros(m))

    def __sub__(self, other):
        return Iterate(self.x - other.x, self.lam - other.lam)

    def stacked(self):
        return np.concatenate([self.x, self.lam])


@dataclass(frozen=True)
class StoppingSpec:
    tol_it: float = 1e-4
    tol_eq: float = 1e-4
    max_iter: int = 50_000

    def __post_init__(self):
        if self.tol_it <= 0 or self.tol_eq <= 0:
            raise ValueError("stopping tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class Record:
    k: int
    it_err: float
    eq_err: float
    objective: float
    re: Optional[float] = None
    lyapunov: Optional[float] = None


@dataclass
class RunHistory:
    records: list = field(default_factory=list)
    termination: str = "max_iter"
    iterations: int = 0
    final: Optional[Iterate] = None
    flags: list = field(default_factory=list)
    wall_seconds: float = 0.0
    message: str = ""

    @property
    def last(self):
        return self.records[-1] if self.records else None

    @property
    def converged(self):
        return self.termination == "converged"


def validate_params(params, A):
    """Check ``params`` against the admissible region for ``A``.

    Computes ``lambda_max(A^T A)`` (unless already cached) and returns a copy
    with ``lam_max`` filled in and ``validated=True``.
    """
    if params.r <= 0:
        raise ParameterError(f"need r > 0, got r = {params.r}")
    if params.s <= 0:
        raise ParameterError(f"need s > 0, got s = {params.s}")
    if params.rho > 1:
        raise ParameterError(f"need rho <= 1, got rho = {params.rho}")
    if not 0 < params.sigma < 2:
        raise ParameterError(f"need 0 < sigma < 2, got sigma = {params.sigma}")
    if not np.isfinite(params.theta):
        raise ParameterError(f"theta must be a finite real, got {params.theta}")
    lam_max = params.lam_max if params.lam_max is not None else spectral_norm_sq(A)
    rs = params.r * params.s
    if not rs > lam_max:
        raise ParameterError(
            f"need r*s > lambda_max(A^T A): r*s = {rs:.12g}, lambda_max = {lam_max:.12g}"
        )
    return dataclasses.replace(params, lam_max=float(lam_max), validated=True)


def tuned_params(A, theta=0.5, r=8.0, s_factor=1.01, rho=1.0, sigma=1.4, lam_max=None):
    """Validated params with ``s = s_factor * lambda_max / r``."""
    if lam_max is None:
        lam_max = spectral_norm_sq(A)
    params = SolverParams(theta=theta, rho=rho, r=r, s=s_factor * lam_max / r,
                          sigma=sigma, lam_max=lam_max)
    return validate_params(params, A)


def preset(name, base, extra=None):
    """Specialize ``base`` to one of the named algorithm variants.

    ``m_ppa`` drops relaxation, ``c_ppa`` is ``(theta, rho) = (0, 1)`` with
    relaxation factor ``extra``, ``p_ppa`` is ``(theta, rho) = (extra + 1, 1)``
    without relaxation, and ``linearized_alm`` is ``theta = rho = 1`` without
    relaxation. ``(r, s)`` are always taken from ``base``.
    """
    if name == "rm_ppa":
        return base
    if name == "m_ppa":
        return dataclasses.replace(base, sigma=1.0)
    if name == "c_ppa":
        gamma = 1.8 if extra is None else float(extra)
        return dataclasses.replace(base, theta=0.0, rho=1.0, sigma=gamma)
    if name == "p_ppa":
        t = -1.0 if extra is None else float(extra)
        return dataclasses.replace(base, theta=t + 1.0, rho=1.0, sigma=1.0)
    if name == "linearized_alm":
        return dataclasses.replace(base, theta=1.0, rho=1.0, sigma=1.0)
    raise ValueError(f"unknown preset {name!r}; valid presets: {', '.join(PRESETS)}")


def lambda_tilde_update(problem, params, x_k, x_tilde, lambda_k, Ax_k=None, Ax_tilde=None):
    """``lambda_k - (1/s)[theta (A x~ - b) + (1 - theta)(A x_k - b)]``."""
    A, b = problem.A, problem.b
    if Ax_k is None:
        Ax_k = A @ x_k
    if Ax_tilde is None:
        Ax_tilde = A @ x_tilde
    theta = params.theta
    return lambda_k - (theta * (Ax_tilde - b) + (1.0 - theta) * (Ax_k - b)) / params.s


def relax_step(w_k, w_tilde, sigma):
    """``(1 - sigma) w_k + sigma w~`` on both blocks."""
    if not 0 < sigma < 2:
        raise ParameterError(f"need 0 < sigma < 2, got sigma = {sigma}")
    return Iterate((1.0 - sigma) * w_k.x + sigma * w_tilde.x,
                   (1.0 - sigma) * w_k.lam + sigma * w_tilde.lam)


def iteration_errors(w_prev, w_curr, Ax_curr, b):
    """Return ``(it_err, eq_err, b_is_zero)`` for the stopping test.

    ``it_err`` is the larger primal/dual step relative to
    ``max(||x_prev||, ||lambda_prev||, 1)``, ``eq_err`` the relative
    residual ``||A x - b|| / ||b||``. A zero ``b`` falls back to the
    denominator ``max(||b||, 1)``.
    """
    step = max(np.linalg.norm(w_curr.x - w_prev.x), np.linalg.norm(w_curr.lam - w_prev.lam))
    scale = max(np.linalg.norm(w_prev.x), np.linalg.norm(w_prev.lam), 1.0)
    b_norm = np.linalg.norm(b)
    b_zero = b_norm == 0.0
    eq_err = np.linalg.norm(Ax_curr - b) / (1.0 if b_zero else b_norm)
    return float(step / scale), float(eq_err), b_zero


def check_stop(it_err, eq_err, stopping):
    return it_err <= stopping.tol_it and eq_err <= stopping.tol_eq


def _step(problem, params, w_k, Ax_k):
    x_tilde = solve_x_subproblem(problem, params, w_k.x, w_k.lam, Ax_k=Ax_k)
    Ax_tilde = problem.A @ x_tilde
    lam_tilde = lambda_tilde_update(problem, params, w_k.x, x_tilde, w_k.lam,
                                    Ax_k=Ax_k, Ax_tilde=Ax_tilde)
    w_tilde = Iterate(x_tilde, lam_tilde)
    return w_tilde, relax_step(w_k, w_tilde, params.sigma)


def iterate_once(problem, params, w_k):
    """One full step; returns ``(w_tilde, w_next)``."""
    if not params.validated:
        raise ParameterError("params must be validated first (see validate_params)")
    return _step(problem, params, w_k, problem.A @ w_k.x)


def run(problem, params, stopping=None, w0=None, monitor=None, record_objective=True,
        progress_every=0):
    """Iterate from ``w0`` (default zero) until the stopping test passes.

    Parameters
    ----------
    monitor : object, optional
        Anything with an ``observe(k, w_k, w_tilde, w_next)`` method. It is
        called after every step; a non-``None`` float return value is stored
        as the record's ``lyapunov`` entry.
    progress_every : int
        If positive, log a progress line every that many iterations.

    Returns
    -------
    RunHistory
        ``termination`` is ``"converged"``, ``"max_iter"`` or ``"error"``;
        hitting the iteration cap is not an exception.
    """
    if not params.validated:
        raise ParameterError("params must be validated first (see validate_params)")
    stopping = stopping or StoppingSpec()
    A, b = problem.A, problem.b
    w = w0 if w0 is not None else Iterate.zeros(problem.n, problem.m)
    w = Iterate(as_vector(w.x, problem.n).copy(), as_vector(w.lam, problem.m).copy())
    Ax = A @ w.x
    history = RunHistory()
    x_orig = problem.x_orig
    orig_norm = np.linalg.norm(x_orig) if x_orig is not None else 0.0
    flagged = False
    start = time.perf_counter()

    for k in range(1, stopping.max_iter + 1):
        try:
            w_tilde, w_next = _step(problem, params, w, Ax)
        except RMPPAError as err:
            history.termination = "error"
            history.message = str(err)
            break
        Ax_next = A @ w_next.x
        it_err, eq_err, b_zero = iteration_errors(w, w_next, Ax_next, b)
        if b_zero and not flagged:
            history.flags.append("b_zero: Eq_err uses denominator max(||b||, 1)")
            flagged = True
        lyap = monitor.observe(k - 1, w, w_tilde, w_next) if monitor is not None else None
        rec = Record(
            k=k,
            it_err=it_err,
            eq_err=eq_err,
            objective=problem.objective.value(w_next.x) if record_objective else float("nan"),
            re=(float(np.linalg.norm(w_next.x - x_orig) / orig_norm)
                if x_orig is not None and orig_norm > 0 else None),
            lyapunov=lyap,
        )
        history.records.append(rec)
        history.iterations = k
        w, Ax = w_next, Ax_next
        if not (np.isfinite(it_err) and np.isfinite(eq_err)):
            history.termination = "error"
            history.message = "non-finite iterate"
            break
        if progress_every and k % progress_every == 0:
            logger.info("k=%d it_err=%.3e eq_err=%.3e", k, it_err, eq_err)
        if check_stop(it_err, eq_err, stopping):
            history.termination = "converged"
            break
    else:
        history.termination = "max_iter"

    history.final = w
    history.wall_seconds = time.perf_counter() - start
    return history
