"""Sparse-recovery benchmark: instance generation, theta sweep, and
multi-algorithm convergence curves written as CSV."""

import csv
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import RMPPAError
from .linops import make_rng, normal_sample, spectral_norm_sq
from .prox import AllSpace, L1Norm
from .solver import ProblemInstance, SolverParams, preset, run, validate_params

__all__ = [
    "InstanceSpec",
    "DESK_SCALE",
    "FULL_SCALE",
    "PUBLISHED_THETAS",
    "PUBLISHED_IT",
    "gen_instance",
    "recovery_error",
    "SweepRow",
    "theta_sweep",
    "write_table_csv",
    "read_table_csv",
    "AlgorithmConfig",
    "DEFAULT_COMPARISON",
    "CurveRecord",
    "compare_algorithms",
    "write_curve_csv",
    "read_curve_csv",
]

logger = logging.getLogger(__name__)

# Published iteration counts per theta for the 3000 x 10000 instance.
PUBLISHED_THETAS = (-5.0, -2.0, -1.0, -0.5, 0.0, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0)
PUBLISHED_IT = dict(zip(PUBLISHED_THETAS, (886, 827, 844, 851, 845, 851, 826, 840, 832, 855, 881)))


@dataclass(frozen=True)
class InstanceSpec:
    m: int = 300
    n: int = 1000
    spikes: int = 18
    amplitude: float = 1.0
    noise_std: float = 0.01
    seed: int = 2019

    def __post_init__(self):
        if self.m < 1 or self.n < 1 or self.spikes < 1:
            raise ValueError("m, n and spikes must be positive")
        if self.spikes > self.n:
            raise ValueError(f"spikes ({self.spikes}) cannot exceed n ({self.n})")
        if self.m > self.n:
            raise ValueError(f"m ({self.m}) cannot exceed n ({self.n})")
        if self.noise_std < 0:
            raise ValueError("noise_std must be non-negative")


DESK_SCALE = InstanceSpec()
FULL_SCALE = InstanceSpec(m=3000, n=10000, spikes=180)


def gen_instance(spec):
    """Random basis-pursuit instance with a ``±amplitude`` spike signal.

    ``A`` has i.i.d. standard normal entries with every row scaled to unit
    norm; ``b = A x_orig + v`` with ``v ~ N(0, noise_std^2 I)``. Spike
    positions come from a seeded shuffle and signs are fair coin flips.
    """
    rng = make_rng(spec.seed)
    positions = rng.permutation(spec.n)[: spec.spikes]
    signs = rng.choice(np.array([-1.0, 1.0]), size=spec.spikes)
    x_orig = np.zeros(spec.n)
    x_orig[positions] = spec.amplitude * signs
    A = normal_sample(rng, spec.m * spec.n, 0.0, 1.0).reshape(spec.m, spec.n)
    A /= np.linalg.norm(A, axis=1, keepdims=True)
    b = A @ x_orig
    if spec.noise_std > 0:
        b = b + normal_sample(rng, spec.m, 0.0, spec.noise_std)
    return ProblemInstance(A=A, b=b, objective=L1Norm(), feasible_set=AllSpace(), x_orig=x_orig)


def recovery_error(x, x_orig):
    """``||x - x_orig|| / ||x_orig||``."""
    x = np.asarray(x, dtype=np.float64)
    x_orig = np.asarray(x_orig, dtype=np.float64)
    if x.shape != x_orig.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {x_orig.shape}")
    denom = np.linalg.norm(x_orig)
    if denom == 0:
        raise ValueError("recovery error is undefined for a zero reference signal")
    return float(np.linalg.norm(x - x_orig) / denom)


@dataclass
class SweepRow:
    theta: float
    it: int
    cpu_s: float
    it_err: float
    eq_err: float
    re: float
    termination: str = "converged"
    error: Optional[str] = None


def _summary_row(theta, history):
    last = history.last
    return SweepRow(
        theta=theta,
        it=history.iterations,
        cpu_s=history.wall_seconds,
        it_err=last.it_err if last else math.nan,
        eq_err=last.eq_err if last else math.nan,
        re=last.re if last is not None and last.re is not None else math.nan,
        termination=history.termination,
        error=history.message or None,
    )


def theta_sweep(spec_or_problem, thetas, base=None, stopping=None, s_factor=1.01):
    """Run once per theta on a single shared instance, from ``(0, 0)``.

    ``base`` supplies ``(rho, r, s, sigma)``; when omitted the tuned values
    ``r = 8``, ``s = s_factor * lambda_max / r``, ``rho = 1``, ``sigma = 1.4``
    are used. Rows follow the input order of ``thetas``; a failing theta
    yields a row with ``termination="error"``.
    """
    problem = (gen_instance(spec_or_problem) if isinstance(spec_or_problem, InstanceSpec)
               else spec_or_problem)
    if base is None:
        lam_max = spectral_norm_sq(problem.A)
        base = SolverParams(r=8.0, s=s_factor * lam_max / 8.0, rho=1.0, sigma=1.4,
                            lam_max=lam_max)
    rows = []
    for theta in thetas:
        try:
            params = validate_params(SolverParams(
                theta=float(theta), rho=base.rho, r=base.r, s=base.s,
                sigma=base.sigma, lam_max=base.lam_max), problem.A)
            hist = run(problem, params, stopping)
            rows.append(_summary_row(float(theta), hist))
        except RMPPAError as err:
            rows.append(SweepRow(float(theta), 0, 0.0, math.nan, math.nan, math.nan,
                                 termination="error", error=str(err)))
        logger.info("theta=%g: %s", theta, rows[-1])
    return rows


TABLE_HEADER = ["theta", "it", "cpu_s", "it_err", "eq_err", "re"]


def write_table_csv(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TABLE_HEADER)
        for row in rows:
            writer.writerow(["%.6e" % row.theta, row.it, "%.6e" % row.cpu_s,
                             "%.6e" % row.it_err, "%.6e" % row.eq_err, "%.6e" % row.re])


def read_table_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != TABLE_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [SweepRow(float(d["theta"]), int(d["it"]), float(d["cpu_s"]),
                         float(d["it_err"]), float(d["eq_err"]), float(d["re"]))
                for d in reader]


@dataclass(frozen=True)
class AlgorithmConfig:
    label: str
    preset: str
    extra: Optional[float] = None
    s_factor: float = 1.01


DEFAULT_COMPARISON = (
    AlgorithmConfig("RM-PPA", "rm_ppa"),
    AlgorithmConfig("M-PPA", "m_ppa"),
    AlgorithmConfig("C-PPA", "c_ppa", extra=1.8, s_factor=1.02),
    AlgorithmConfig("P-PPA", "p_ppa", extra=-1.0, s_factor=1.02),
)


@dataclass
class CurveRecord:
    label: str
    eq_err0: float = math.nan
    k: list = field(default_factory=list)
    ler: list = field(default_factory=list)
    lir: list = field(default_factory=list)
    eq_err: list = field(default_factory=list)
    iterations: int = 0
    termination: str = ""
    re: float = math.nan
    error: Optional[str] = None
    history: object = field(default=None, repr=False)


def _log2(v):
    return math.log2(v) if v > 0 else -math.inf


def compare_algorithms(spec_or_problem, configs=DEFAULT_COMPARISON, stopping=None,
                       theta=0.5, r=8.0, sigma=1.4, keep_history=False):
    """Run each algorithm variant on one shared instance from ``(0, 0)``.

    Every variant shares ``r`` and derives ``s = s_factor * lambda_max / r``
    from its own config; the preset then fixes ``(theta, rho, sigma)``.
    ``eq_err0`` holds the residual at the shared start; curve entries begin
    at ``k = 1`` where both residuals are defined.
    """
    problem = (gen_instance(spec_or_problem) if isinstance(spec_or_problem, InstanceSpec)
               else spec_or_problem)
    lam_max = spectral_norm_sq(problem.A)
    b_norm = np.linalg.norm(problem.b) or 1.0
    eq0 = float(np.linalg.norm(problem.b) / b_norm)  # A x0 - b = -b at x0 = 0
    curves = []
    for cfg in configs:
        curve = CurveRecord(label=cfg.label, eq_err0=eq0)
        try:
            base = SolverParams(theta=theta, rho=1.0, r=r, s=cfg.s_factor * lam_max / r,
                                sigma=sigma, lam_max=lam_max)
            params = validate_params(preset(cfg.preset, base, cfg.extra), problem.A)
            hist = run(problem, params, stopping)
        except (RMPPAError, ValueError) as err:
            curve.termination = "error"
            curve.error = str(err)
            curves.append(curve)
            continue
        for rec in hist.records:
            curve.k.append(rec.k)
            curve.eq_err.append(rec.eq_err)
            curve.ler.append(_log2(rec.eq_err))
            curve.lir.append(_log2(rec.it_err))
        curve.iterations = hist.iterations
        curve.termination = hist.termination
        curve.error = hist.message or None
        if problem.x_orig is not None:
            curve.re = recovery_error(hist.final.x, problem.x_orig)
        if keep_history:
            curve.history = hist
        curves.append(curve)
        logger.info("%s: %d iterations (%s), RE=%.3e", cfg.label, curve.iterations,
                    curve.termination, curve.re)
    return curves


def write_curve_csv(out_dir, curve):
    """Write ``<label>_curve.csv`` with columns ``k,ler,lir`` and return its path."""
    path = os.path.join(out_dir, f"{curve.label}_curve.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "ler", "lir"])
        for k, ler, lir in zip(curve.k, curve.ler, curve.lir):
            writer.writerow([k, "%.6e" % ler, "%.6e" % lir])
    return path


def read_curve_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["k", "ler", "lir"]:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        rows = [(int(d["k"]), float(d["ler"]), float(d["lir"])) for d in reader]
    return rows
