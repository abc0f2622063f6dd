"""Proximal and projection oracles and the primal subproblem solver.

Proximity operators follow the ``tau`` convention::

    prox(c, tau) = argmin_u  f(u) + ||u - c||^2 / (2 tau)

so the penalty-``r`` form ``argmin f(u) + (r/2)||u - c||^2`` is
``prox(c, 1/r)``.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError, SubproblemError

__all__ = [
    "L1Norm",
    "CustomObjective",
    "AllSpace",
    "Box",
    "prox_l1",
    "project",
    "objective_value",
    "subproblem_center",
    "solve_x_subproblem",
    "INNER_TOL",
    "INNER_MAX_ITER",
]

INNER_TOL = 1e-10
INNER_MAX_ITER = 10_000


def prox_l1(c, tau):
    """Soft thresholding ``sign(c) * max(|c| - tau, 0)``."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    c = np.asarray(c, dtype=np.float64)
    return np.sign(c) * np.maximum(np.abs(c) - tau, 0.0)


@dataclass(frozen=True)
class L1Norm:
    """``f(x) = ||x||_1``."""

    kind: str = field(default="l1_norm", init=False)

    def value(self, x):
        return float(np.sum(np.abs(x)))

    def prox(self, c, tau):
        return prox_l1(c, tau)


@dataclass(frozen=True)
class CustomObjective:
    """User-supplied objective given by a value oracle and a prox oracle.

    ``prox_fn(c, tau)`` must return ``argmin_u f(u) + ||u - c||^2 / (2 tau)``.
    Either oracle may be omitted; operations needing a missing one raise
    ``NotImplementedError``.
    """

    value_fn: Optional[Callable] = None
    prox_fn: Optional[Callable] = None
    kind: str = field(default="custom", init=False)

    def value(self, x):
        if self.value_fn is None:
            raise NotImplementedError("custom objective has no value oracle")
        return float(self.value_fn(x))

    def prox(self, c, tau):
        if self.prox_fn is None:
            raise NotImplementedError("custom objective has no prox oracle")
        return np.asarray(self.prox_fn(c, tau), dtype=np.float64)


@dataclass(frozen=True)
class AllSpace:
    kind: str = field(default="all_space", init=False)

    def project(self, x):
        return np.asarray(x, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class Box:
    """Componentwise bounds ``lower <= x <= upper``; infinite bounds allowed."""

    lower: np.ndarray
    upper: np.ndarray
    kind: str = field(default="box", init=False)

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=np.float64)
        upper = np.asarray(self.upper, dtype=np.float64)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise DimensionError(
                f"box bounds must be 1-D of equal length, got {lower.shape} and {upper.shape}"
            )
        if np.any(lower > upper):
            raise ValueError("box requires lower <= upper componentwise")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    def project(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != self.lower.shape:
            raise DimensionError(f"box has dim {self.lower.shape[0]}, vector has dim {x.shape[0]}")
        return np.clip(x, self.lower, self.upper)


def project(feasible_set, x):
    """Euclidean projection of ``x`` onto ``feasible_set``."""
    return feasible_set.project(x)


def objective_value(objective, x):
    return objective.value(np.asarray(x, dtype=np.float64))


def _prox_on_set(objective, feasible_set, c, tau):
    # clip(prox) is the exact prox of f + indicator(box) for separable f,
    # which covers l1; for custom objectives it is exact only when f is.
    u = objective.prox(c, tau)
    if feasible_set.kind == "all_space":
        return u
    return feasible_set.project(u)


def subproblem_center(problem, params, x_k, lambda_k, Ax_k=None):
    """Center ``c_k`` of the proximal term in the primal subproblem.

    ``c_k = x_k + (1/r) A^T [lambda_k - ((2 - theta)/s)(A x_k - b)]``.
    """
    A, b = problem.A, problem.b
    if Ax_k is None:
        Ax_k = A @ x_k
    y = lambda_k - ((2.0 - params.theta) / params.s) * (Ax_k - b)
    return x_k + (y @ A) / params.r


def solve_x_subproblem(problem, params, x_k, lambda_k, Ax_k=None, method="auto",
                       inner_tol=INNER_TOL, inner_max_iter=INNER_MAX_ITER):
    """Solve the primal step of the iteration.

    Returns the minimizer over the feasible set of::

        f(x) + (r/2)||x - c_k||^2 + ((1 - rho)/(2 s))||A (x - x_k)||^2

    which is the primal block of the proximal step with matrix ``G``; the
    extra term is a nonnegative penalty for ``rho <= 1``. With ``rho == 1``
    on the whole space this is a single prox evaluation. Otherwise a
    proximal-gradient loop with step ``1/L``,
    ``L = r + |1 - rho| lambda_max / s``, runs until the gradient-mapping
    norm falls below ``inner_tol``.

    Parameters
    ----------
    method : {"auto", "closed", "inner"}
        ``"inner"`` forces the iterative path even when the closed form
        applies; ``"closed"`` insists on the closed form.
    """
    A = problem.A
    x_k = np.asarray(x_k, dtype=np.float64)
    lambda_k = np.asarray(lambda_k, dtype=np.float64)
    if x_k.shape[0] != A.shape[1] or lambda_k.shape[0] != A.shape[0]:
        raise DimensionError(
            f"iterate dims ({x_k.shape[0]}, {lambda_k.shape[0]}) do not match A {A.shape}"
        )
    r, s, rho = params.r, params.s, params.rho
    if Ax_k is None:
        Ax_k = A @ x_k
    c = subproblem_center(problem, params, x_k, lambda_k, Ax_k)

    closed_ok = rho == 1.0 and problem.feasible_set.kind == "all_space"
    if method == "closed" and not closed_ok:
        raise ValueError("closed-form subproblem needs rho == 1 and an unconstrained x")
    if method not in ("auto", "closed", "inner"):
        raise ValueError(f"unknown method {method!r}")
    if closed_ok and method != "inner":
        return problem.objective.prox(c, 1.0 / r)

    lam_max = params.lam_max
    if lam_max is None:
        raise ValueError("params must be validated before solving the subproblem")
    coef = (1.0 - rho) / s
    # only reachable with rho > 1, which validation rejects
    if r + min(coef, 0.0) * lam_max <= 0.0:
        raise SubproblemError(
            f"subproblem is not strongly convex: r = {r:.6g} <= "
            f"(rho - 1)*lambda_max/s = {-coef * lam_max:.6g}"
        )
    lipschitz = r + abs(coef) * lam_max
    step = 1.0 / lipschitz
    objective, feasible_set = problem.objective, problem.feasible_set

    x = feasible_set.project(x_k)
    residual = np.inf
    for _ in range(inner_max_iter):
        grad = r * (x - c)
        if coef != 0.0:
            grad += coef * ((A @ (x - x_k)) @ A)
        x_new = _prox_on_set(objective, feasible_set, x - step * grad, step)
        residual = lipschitz * np.linalg.norm(x_new - x)
        x = x_new
        if residual <= inner_tol:
            return x
    raise SubproblemError(
        f"inner solver stopped after {inner_max_iter} iterations with residual {residual:.3e}",
        residual=residual,
    )
