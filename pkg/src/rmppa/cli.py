"""Command-line front end.

Subcommands::

    rmppa gen --m 300 --n 1000 --spikes 18 --noise-std 0.01 --seed 1 --out inst/
    rmppa solve --config run.cfg [--preset NAME] [--load inst/] [--diagnostics] --out res/
    rmppa sweep-theta --config run.cfg --thetas -5,0.5,10 --out res/
    rmppa compare --config run.cfg --algs rm_ppa,m_ppa,c_ppa,p_ppa --out res/

Exit status is 0 on success, 1 for usage or configuration errors and 2 for
numerical failures.
"""

import argparse
import csv
import dataclasses
import json
import logging
import math
import os
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import bench
from .diagnostics import DiagnosticsMonitor, reference_saddle_point
from .errors import ConfigError, ConvergenceError, ParameterError, SubproblemError
from .linops import read_matrix, read_vector, spectral_norm_sq, write_matrix, write_vector
from .prox import AllSpace, L1Norm
from .solver import PRESETS, ProblemInstance, SolverParams, StoppingSpec, preset, run, validate_params

__all__ = ["Config", "parse_config", "load_instance", "main"]

logger = logging.getLogger("rmppa")


@dataclass(frozen=True)
class Config:
    theta: float = 0.5
    rho: float = 1.0
    r: float = 8.0
    s_factor: float = 1.01
    sigma: float = 1.4
    tol_it: float = 1e-4
    tol_eq: float = 1e-4
    max_iter: int = 50_000
    seed: int = 2019
    m: int = 300
    n: int = 1000
    spikes: int = 18
    noise_std: float = 0.01
    preset: str = "rm_ppa"
    preset_extra: Optional[float] = None
    diagnostics: bool = False
    out_dir: str = "out"

    def instance_spec(self):
        return bench.InstanceSpec(m=self.m, n=self.n, spikes=self.spikes,
                                  noise_std=self.noise_std, seed=self.seed)

    def stopping(self):
        return StoppingSpec(tol_it=self.tol_it, tol_eq=self.tol_eq, max_iter=self.max_iter)


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _convert(key, raw, lineno):
    ftype = {f.name: f.type for f in dataclasses.fields(Config)}[key]
    try:
        if ftype is float:
            return float(raw)
        if ftype is int:
            return int(raw)
        if ftype is bool:
            low = raw.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(raw)
        if ftype == Optional[float]:
            return None if raw.lower() in ("", "none") else float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"line {lineno}: cannot parse value {raw!r} for key '{key}'") from None


# key -> (predicate, rule); checked after parsing
_RULES = {
    "rho": (lambda v: v <= 1, "rho <= 1"),
    "r": (lambda v: v > 0, "r > 0"),
    "s_factor": (lambda v: v > 1, "s_factor > 1 so that r*s > lambda_max(A^T A)"),
    "sigma": (lambda v: 0 < v < 2, "0 < sigma < 2"),
    "tol_it": (lambda v: v > 0, "tol_it > 0"),
    "tol_eq": (lambda v: v > 0, "tol_eq > 0"),
    "max_iter": (lambda v: v >= 1, "max_iter >= 1"),
    "m": (lambda v: v >= 1, "m >= 1"),
    "n": (lambda v: v >= 1, "n >= 1"),
    "spikes": (lambda v: v >= 1, "spikes >= 1"),
    "noise_std": (lambda v: v >= 0, "noise_std >= 0"),
    "preset": (lambda v: v in PRESETS, "preset in {" + ", ".join(PRESETS) + "}"),
}


def parse_config(text):
    """Parse ``key = value`` lines (``#`` starts a comment) into a Config."""
    names = {f.name for f in dataclasses.fields(Config)}
    values, where = {}, {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in names:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
        values[key] = _convert(key, raw, lineno)
        where[key] = lineno
    for key, value in values.items():
        if key in _RULES:
            ok, rule = _RULES[key]
            if not ok(value):
                raise ConfigError(f"line {where[key]}: key '{key}' = {value!r} violates {rule}")
    cfg = Config(**values)
    for key, bad, rule in (("spikes", cfg.spikes > cfg.n, "spikes <= n"),
                           ("m", cfg.m > cfg.n, "m <= n")):
        if bad:
            lineno = where.get(key, where.get("n", 0))
            raise ConfigError(f"line {lineno}: key '{key}' violates {rule}")
    return cfg


def load_config(path):
    if path is None:
        return Config()
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def load_instance(directory):
    """Read ``A.txt``, ``b.txt`` and, if present, ``x_orig.txt``."""
    A = read_matrix(os.path.join(directory, "A.txt"))
    b = read_vector(os.path.join(directory, "b.txt"))
    x_path = os.path.join(directory, "x_orig.txt")
    x_orig = read_vector(x_path) if os.path.exists(x_path) else None
    return ProblemInstance(A=A, b=b, objective=L1Norm(), feasible_set=AllSpace(), x_orig=x_orig)


def _write_manifest(directory, payload):
    with open(os.path.join(directory, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)


def _fmt(v):
    return "nan" if v is None else "%.6e" % v


def cmd_gen(args):
    spec = bench.InstanceSpec(m=args.m, n=args.n, spikes=args.spikes, amplitude=args.amplitude,
                              noise_std=args.noise_std, seed=args.seed)
    problem = bench.gen_instance(spec)
    os.makedirs(args.out, exist_ok=True)
    write_matrix(os.path.join(args.out, "A.txt"), problem.A)
    write_vector(os.path.join(args.out, "b.txt"), problem.b)
    write_vector(os.path.join(args.out, "x_orig.txt"), problem.x_orig)
    _write_manifest(args.out, {"source": "generated", "spec": dataclasses.asdict(spec)})
    print(f"wrote {spec.m}x{spec.n} instance to {args.out}")
    return 0


def _base_params(cfg, A, lam_max):
    return SolverParams(theta=cfg.theta, rho=cfg.rho, r=cfg.r, s=cfg.s_factor * lam_max / cfg.r,
                        sigma=cfg.sigma, lam_max=lam_max)


def cmd_solve(args):
    cfg = load_config(args.config)
    out = args.out or cfg.out_dir
    name = args.preset or cfg.preset
    diagnostics = args.diagnostics or cfg.diagnostics
    if args.load:
        problem = load_instance(args.load)
        source = {"source": "loaded", "path": os.path.abspath(args.load)}
    else:
        spec = cfg.instance_spec()
        problem = bench.gen_instance(spec)
        source = {"source": "generated", "spec": dataclasses.asdict(spec)}
    lam_max = spectral_norm_sq(problem.A)
    params = validate_params(preset(name, _base_params(cfg, problem.A, lam_max), cfg.preset_extra),
                             problem.A)
    monitor = None
    if diagnostics:
        w_ref = reference_saddle_point(problem)
        stride = 1 if problem.n < 5000 else 10
        monitor = DiagnosticsMonitor(problem, params, w_ref, stride=stride)
    hist = run(problem, params, cfg.stopping(), monitor=monitor, progress_every=500)
    if hist.termination == "error":
        raise SubproblemError(hist.message)

    os.makedirs(out, exist_ok=True)
    header = ["k", "it_err", "eq_err", "obj", "re"]
    diag_rows = {}
    if monitor is not None:
        header += ["lyapunov", "t_form_a", "t_form_b", "bound_gap"]
        rep = monitor.report
        diag_rows = {k + 1: row for k, *row in zip(rep.k, rep.lyapunov, rep.t_form_a,
                                                    rep.t_form_b, rep.bound_gap)}
        rep.to_csv(os.path.join(out, "diagnostics.csv"))
    with open(os.path.join(out, "history.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for rec in hist.records:
            row = [rec.k, _fmt(rec.it_err), _fmt(rec.eq_err), _fmt(rec.objective), _fmt(rec.re)]
            if monitor is not None:
                row += [_fmt(v) for v in diag_rows.get(rec.k, [math.nan] * 4)]
            writer.writerow(row)
    _write_manifest(out, {**source, "preset": name, "params": dataclasses.asdict(params),
                          "termination": hist.termination, "iterations": hist.iterations})
    last = hist.last
    print(f"IT={hist.iterations} It_err={_fmt(last.it_err)} Eq_err={_fmt(last.eq_err)} "
          f"RE={_fmt(last.re)}")
    if monitor is not None:
        rep = monitor.report
        print(f"diagnostics: monotone={rep.monotone} descent={rep.descent} "
              f"bounds_hold={rep.bounds_hold} worst_violation={rep.worst_violation:.3e}")
    if not hist.converged:
        print(f"warning: stopped by {hist.termination} before meeting tolerances", file=sys.stderr)
    return 0


def _parse_floats(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse comma list {text!r}") from None


def cmd_sweep(args):
    cfg = load_config(args.config)
    out = args.out or cfg.out_dir
    thetas = _parse_floats(args.thetas) if args.thetas else list(bench.PUBLISHED_THETAS)
    problem = bench.gen_instance(cfg.instance_spec())
    lam_max = spectral_norm_sq(problem.A)
    base = _base_params(cfg, problem.A, lam_max)
    rows = bench.theta_sweep(problem, thetas, base=base, stopping=cfg.stopping())
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "theta_sweep.csv")
    bench.write_table_csv(path, rows)
    for row in rows:
        print(f"theta={row.theta:g} IT={row.it} It_err={row.it_err:.2e} "
              f"Eq_err={row.eq_err:.2e} RE={row.re:.3e} ({row.termination})")
    print(f"wrote {path}")
    return 0


_ALG_CONFIGS = {
    "rm_ppa": bench.DEFAULT_COMPARISON[0],
    "m_ppa": bench.DEFAULT_COMPARISON[1],
    "c_ppa": bench.DEFAULT_COMPARISON[2],
    "p_ppa": bench.DEFAULT_COMPARISON[3],
    "linearized_alm": bench.AlgorithmConfig("LALM", "linearized_alm"),
}


def cmd_compare(args):
    cfg = load_config(args.config)
    out = args.out or cfg.out_dir
    names = [a.strip() for a in (args.algs or "rm_ppa,m_ppa,c_ppa,p_ppa").split(",") if a.strip()]
    unknown = [a for a in names if a not in _ALG_CONFIGS]
    if unknown:
        raise ConfigError(f"unknown algorithm(s) {unknown}; valid: {', '.join(_ALG_CONFIGS)}")
    configs = []
    for a in names:
        c = _ALG_CONFIGS[a]
        if c.preset in ("rm_ppa", "m_ppa", "linearized_alm"):
            c = dataclasses.replace(c, s_factor=cfg.s_factor)
        configs.append(c)
    curves = bench.compare_algorithms(cfg.instance_spec(), configs, stopping=cfg.stopping(),
                                      theta=cfg.theta, r=cfg.r, sigma=cfg.sigma)
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "compare_summary.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "it", "termination", "re"])
        for curve in curves:
            bench.write_curve_csv(out, curve)
            writer.writerow([curve.label, curve.iterations, curve.termination, _fmt(curve.re)])
            print(f"{curve.label}: IT={curve.iterations} ({curve.termination}) RE={_fmt(curve.re)}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="rmppa", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a sparse-recovery instance")
    p.add_argument("--m", type=int, default=300)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--spikes", type=int, default=18)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--noise-std", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=2019)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="run one configuration")
    p.add_argument("--config")
    p.add_argument("--preset", choices=PRESETS)
    p.add_argument("--load", help="directory written by 'gen'")
    p.add_argument("--diagnostics", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep-theta", help="theta sweep on one instance")
    p.add_argument("--config")
    p.add_argument("--thetas", help="comma-separated list (default: the 11-value grid)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="convergence curves of several variants")
    p.add_argument("--config")
    p.add_argument("--algs", help="comma-separated subset of " + ",".join(_ALG_CONFIGS))
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (ConfigError, ParameterError, FileNotFoundError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except (ConvergenceError, SubproblemError, FloatingPointError, np.linalg.LinAlgError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
