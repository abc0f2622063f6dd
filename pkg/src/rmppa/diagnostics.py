"""Runtime checks of the convergence theory.

All quadratic forms are evaluated matrix-free. For ``w = (x, lam)``::

    ||w||^2_G  = r||x||^2 + c||Ax||^2 / s + 2 (theta-1) <lam, Ax> + s||lam||^2

with ``c = (theta-1)^2 - rho`` for the proximal matrix ``G`` and
``c = (theta-1)^2 - 1`` for the reduced matrix ``G~``. The Lyapunov
function is ``||w - w*||^2_G~ + ((1-rho)/s)||A(x - x*)||^2``; it decreases by
at least ``T_{k+1}`` per step.
"""

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import RMPPAError
from .solver import Iterate, StoppingSpec, run, tuned_params

__all__ = [
    "quad_form",
    "lyapunov",
    "t_value",
    "J",
    "ErgodicState",
    "ergodic_accumulate",
    "ergodic_point",
    "theorem_bound_gap",
    "gamma_bar",
    "CorollaryCheck",
    "corollary_bounds",
    "residual_vector",
    "subproblem_residual",
    "reference_saddle_point",
    "DiagnosticsMonitor",
    "DiagnosticsReport",
]

logger = logging.getLogger(__name__)


def quad_form(w, params, A, variant="G"):
    """``w^T M w`` for ``M`` the proximal matrix ``"G"`` or ``"G_tilde"``."""
    if variant == "G":
        c = (params.theta - 1.0) ** 2 - params.rho
    elif variant == "G_tilde":
        c = (params.theta - 1.0) ** 2 - 1.0
    else:
        raise ValueError(f"variant must be 'G' or 'G_tilde', got {variant!r}")
    Ax = A @ w.x
    return float(params.r * (w.x @ w.x) + c * (Ax @ Ax) / params.s
                 + 2.0 * (params.theta - 1.0) * (w.lam @ Ax) + params.s * (w.lam @ w.lam))


def _extra_term(dx, params, A):
    # ((1 - rho)/s) ||A dx||^2, the part of G not in G~
    if params.rho == 1.0:
        return 0.0
    Adx = A @ dx
    return (1.0 - params.rho) / params.s * float(Adx @ Adx)


def lyapunov(w, w_ref, params, A):
    d = w - w_ref
    return quad_form(d, params, A, "G_tilde") + _extra_term(d.x, params, A)


def t_value(w_k, w_next, w_tilde, params, A):
    """Return the two algebraic forms of the per-step decrease ``T_{k+1}``.

    ``form_a`` is the difference form built from ``w~``; ``form_b`` the
    closed form in ``w_k - w_{k+1}``. They agree whenever ``w_next`` is the
    relaxation of ``w_k`` toward ``w_tilde``.
    """
    sigma, rho, s = params.sigma, params.rho, params.s
    d_k = w_k - w_tilde
    d_next = w_next - w_tilde
    form_a = (quad_form(d_k, params, A, "G_tilde") - quad_form(d_next, params, A, "G_tilde")
              + _extra_term(d_k.x, params, A) - _extra_term(d_next.x, params, A))
    step = w_k - w_next
    form_b = (2.0 - sigma) / sigma * quad_form(step, params, A, "G_tilde")
    if rho != 1.0:
        As = A @ step.x
        form_b += (1.0 - rho) * (2.0 - sigma) / (s * sigma) * float(As @ As)
    return form_a, form_b


def J(w, A, b):
    """The monotone affine map ``(-A^T lam, A x - b)``."""
    return Iterate(-(w.lam @ A), A @ w.x - b)


@dataclass
class ErgodicState:
    """Running sums of the tilde iterates ``w~^0, ..., w~^t``."""

    count: int = 0
    sum_x: np.ndarray = None
    sum_lam: np.ndarray = None

    @property
    def t(self):
        return self.count - 1

    def accumulate(self, w_tilde):
        if self.count == 0:
            self.sum_x = np.array(w_tilde.x, dtype=np.float64)
            self.sum_lam = np.array(w_tilde.lam, dtype=np.float64)
        else:
            if w_tilde.x.shape != self.sum_x.shape or w_tilde.lam.shape != self.sum_lam.shape:
                raise ValueError("ergodic accumulation with mismatched dimensions")
            self.sum_x += w_tilde.x
            self.sum_lam += w_tilde.lam
        self.count += 1
        return self

    def point(self):
        if self.count == 0:
            raise ValueError("ergodic point of an empty state is undefined")
        return Iterate(self.sum_x / self.count, self.sum_lam / self.count)


def ergodic_accumulate(state, w_tilde):
    return state.accumulate(w_tilde)


def ergodic_point(state):
    return state.point()


def theorem_bound_gap(w_probe, ergodic, w0, t, params, problem):
    """Slack of the ergodic rate inequality at averaging index ``t``.

    Returns ``RHS - LHS`` where::

        LHS = f(x_t) - f(x) + (w_t - w)^T J(w)
        RHS = V(w0; w) / (2 sigma (t + 1))

    with ``w = w_probe`` and ``V`` the Lyapunov function centered at
    ``w``. Nonnegative means the bound holds.
    """
    A, b, f = problem.A, problem.b, problem.objective
    lhs = (f.value(ergodic.x) - f.value(w_probe.x)
           + float((ergodic - w_probe).stacked() @ J(w_probe, A, b).stacked()))
    rhs = lyapunov(w0, w_probe, params, A) / (2.0 * params.sigma * (t + 1))
    return rhs - lhs


def gamma_bar(w0, x_star, lambda_star, params, A, b, xi=None):
    """Rate constant for the ergodic objective/feasibility bounds.

    Evaluates ``sup_{||lam|| <= xi} ||(x0 - x*; lam0 - lam)||^2_G~ +
    ((1-rho)/s)||A x0 - b||^2`` at the single reference ``x*``, with
    ``xi = 2||lambda*|| + 1`` by default. The ``lam`` block of ``G~`` is
    ``s I``, so the objective is a convex quadratic in ``lam`` and its maximum
    over the ball sits on the sphere opposite to ``s lam0 + (theta-1) A(x0-x*)``.
    """
    if xi is None:
        xi = 2.0 * np.linalg.norm(lambda_star) + 1.0
    dx = w0.x - x_star
    v = A @ dx
    u = params.s * w0.lam + (params.theta - 1.0) * v
    nu = np.linalg.norm(u)
    if nu > 0:
        lam = -xi * u / nu
    else:
        lam = np.zeros_like(w0.lam)
        lam[0] = xi
    r0 = A @ w0.x - b
    value = quad_form(Iterate(dx, w0.lam - lam), params, A, "G_tilde")
    if params.rho != 1.0:
        value += (1.0 - params.rho) / params.s * float(r0 @ r0)
    return value


@dataclass(frozen=True)
class CorollaryCheck:
    feas_ok: bool
    obj_ok: bool
    feas_margin: float
    obj_margin: float


def corollary_bounds(x_t, lambda_star, f_star, gamma, t, sigma, problem):
    """Check the O(1/t) feasibility and objective bounds at ``x_t``.

    Margins are ``bound - observed``; both checks pass when the margin is
    nonnegative.
    """
    A, b = problem.A, problem.b
    base = gamma / (2.0 * sigma * (t + 1))
    feas = float(np.linalg.norm(A @ x_t - b))
    feas_margin = base / (np.linalg.norm(lambda_star) + 1.0) - feas
    obj_margin = base - abs(problem.objective.value(x_t) - f_star)
    return CorollaryCheck(feas_margin >= 0, obj_margin >= 0, feas_margin, obj_margin)


def residual_vector(w_k, w_tilde, params, problem, form="reduced"):
    """Smooth-part gradient ``R`` of the primal subproblem at ``x~``.

    ``form="original"`` uses the expression in terms of ``lambda~``;
    ``form="reduced"`` eliminates ``lambda~`` through the multiplier update
    and so depends on ``x~``, ``x_k`` and ``lambda_k`` only. The two agree
    whenever ``lambda~`` was produced by the multiplier update.
    """
    A, b = problem.A, problem.b
    theta, rho, r, s = params.theta, params.rho, params.r, params.s
    dx = w_tilde.x - w_k.x
    Adx = A @ dx
    if form == "original":
        return (-(w_tilde.lam @ A) + r * dx + ((theta - 1.0) ** 2 - rho) / s * (Adx @ A)
                + (theta - 1.0) * ((w_tilde.lam - w_k.lam) @ A))
    if form == "reduced":
        y = w_k.lam - (2.0 - theta) / s * (A @ w_k.x - b)
        return -(y @ A) + r * dx + (1.0 - rho) / s * (Adx @ A)
    raise ValueError(f"form must be 'reduced' or 'original', got {form!r}")


def subproblem_residual(w_k, w_tilde, params, problem):
    """Max violation of ``0 in df(x~) + N_X(x~) + R`` over components.

    Exact for the l1 objective; for other objectives the prox-gradient
    fixed-point residual ``r ||x~ - prox_{f+X}(x~ - R/r, 1/r)||_inf`` is
    returned instead.
    """
    R = residual_vector(w_k, w_tilde, params, problem)
    x = w_tilde.x
    fset = problem.feasible_set
    if problem.objective.kind != "l1_norm":
        tau = 1.0 / params.r
        u = fset.project(problem.objective.prox(x - tau * R, tau))
        return float(np.max(np.abs(x - u)) / tau)
    lo = np.where(x > 0, 1.0, -1.0)
    hi = np.where(x < 0, -1.0, 1.0)
    if fset.kind == "box":
        lo = np.where((x <= fset.lower) & (fset.lower < fset.upper), -np.inf, lo)
        hi = np.where((x >= fset.upper) & (fset.lower < fset.upper), np.inf, hi)
    target = -R
    dist = np.maximum(lo - target, 0.0) + np.maximum(target - hi, 0.0)
    return float(np.max(dist))


def _polish_l1(problem, w, support_tol=1e-8):
    """Refine an approximate basis-pursuit saddle point on its support.

    Returns ``None`` unless the refined pair verifies as a saddle point.
    """
    A, b = problem.A, problem.b
    x = w.x
    scale = max(np.max(np.abs(x)), 1.0)
    S = np.flatnonzero(np.abs(x) > support_tol * scale)
    if S.size == 0 or S.size > A.shape[0]:
        return None
    AS = A[:, S]
    xs, *_ = np.linalg.lstsq(AS, b, rcond=None)
    signs = np.sign(x[S])
    if np.any(np.sign(xs) != signs):
        return None
    gram = AS.T @ AS
    try:
        corr = np.linalg.solve(gram, signs - AS.T @ w.lam)
    except np.linalg.LinAlgError:
        return None
    lam = w.lam + AS @ corr
    x_new = np.zeros_like(x)
    x_new[S] = xs
    feas = np.linalg.norm(A @ x_new - b) / max(np.linalg.norm(b), 1.0)
    dual = np.max(np.abs(lam @ A))
    if feas > 1e-12 or dual > 1.0 + 1e-12:
        return None
    return Iterate(x_new, lam)


def reference_saddle_point(problem, params=None, tol=1e-12, max_iter=10**6, polish=True):
    """High-accuracy primal-dual solution obtained by running the solver.

    With the l1 objective on the whole space the result is refined by
    solving the optimality system on the recovered support, and that
    refinement is kept only when it verifies.
    """
    if params is None:
        params = tuned_params(problem.A)
    hist = run(problem, params, StoppingSpec(tol_it=tol, tol_eq=tol, max_iter=max_iter),
               record_objective=False)
    if hist.termination == "error":
        raise RMPPAError(f"reference solve failed: {hist.message}")
    if not hist.converged:
        logger.warning("reference solve hit max_iter=%d before tol=%g", max_iter, tol)
    w = hist.final
    if polish and problem.objective.kind == "l1_norm" and problem.feasible_set.kind == "all_space":
        refined = _polish_l1(problem, w)
        if refined is not None:
            return refined
        logger.info("support polish did not verify; using the raw solver output")
    return w


@dataclass
class DiagnosticsReport:
    k: list = field(default_factory=list)
    lyapunov: list = field(default_factory=list)
    t_form_a: list = field(default_factory=list)
    t_form_b: list = field(default_factory=list)
    bound_gap: list = field(default_factory=list)
    ergodic_feas: list = field(default_factory=list)
    monotone: bool = True
    descent: bool = True
    bounds_hold: bool = True
    worst_violation: float = 0.0
    slack: float = 1e-8

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k", "lyapunov", "t_form_a", "t_form_b", "bound_gap"])
            for row in zip(self.k, self.lyapunov, self.t_form_a, self.t_form_b, self.bound_gap):
                writer.writerow([row[0]] + ["%.6e" % v for v in row[1:]])


class DiagnosticsMonitor:
    """Per-iteration checker attached to ``solver.run`` via ``monitor=``.

    Against the reference saddle point ``w_ref`` it tracks the Lyapunov
    value, both forms of ``T``, and the ergodic-bound slack. Entry ``i`` of
    the report refers to the step from ``w^k`` to ``w^{k+1}`` with
    ``k = report.k[i]``; the Lyapunov entry is ``V(w^{k+1})``.
    """

    def __init__(self, problem, params, w_ref, w0=None, stride=1, slack=1e-8, bound_tol=1e-8):
        self.problem = problem
        self.params = params
        self.w_ref = w_ref
        self.w0 = w0 if w0 is not None else Iterate.zeros(problem.n, problem.m)
        self.stride = max(int(stride), 1)
        self.ergodic = ErgodicState()
        self.report = DiagnosticsReport(slack=slack)
        self.bound_tol = bound_tol
        self._v_prev = lyapunov(self.w0, w_ref, params, problem.A)
        self._v_initial = self._v_prev

    def observe(self, k, w_k, w_tilde, w_next):
        self.ergodic.accumulate(w_tilde)
        if k % self.stride:
            return None
        A = self.problem.A
        rep = self.report
        v_k = self._v_prev if k == 0 or self.stride == 1 else lyapunov(w_k, self.w_ref, self.params, A)
        v_next = lyapunov(w_next, self.w_ref, self.params, A)
        form_a, form_b = t_value(w_k, w_next, w_tilde, self.params, A)
        point = self.ergodic.point()
        gap = theorem_bound_gap(self.w_ref, point, self.w0, k, self.params, self.problem)

        allowance = rep.slack * (1.0 + v_k)
        descent_excess = v_next - (v_k - form_b) - allowance
        if v_next - v_k > allowance:
            rep.monotone = False
        if descent_excess > 0:
            rep.descent = False
        if gap < -self.bound_tol:
            rep.bounds_hold = False
        rep.worst_violation = max(rep.worst_violation, descent_excess + allowance, -gap)

        rep.k.append(k)
        rep.lyapunov.append(v_next)
        rep.t_form_a.append(form_a)
        rep.t_form_b.append(form_b)
        rep.bound_gap.append(gap)
        rep.ergodic_feas.append(float(np.linalg.norm(A @ point.x - self.problem.b)))
        self._v_prev = v_next
        return v_next
