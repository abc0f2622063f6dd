#!/usr/bin/env python3
"""LER/LIR curves of RM-PPA, M-PPA, C-PPA and P-PPA on one shared instance.

Writes ``<label>_curve.csv`` per method and, when matplotlib is available,
a two-panel ``curves.png``.
"""
import argparse
import os

from rmppa import bench


def plot(curves, path):
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not installed; skipping the figure")
        return
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    for c in curves:
        ax1.plot(c.k, c.ler, label=c.label)
        ax2.plot(c.k, c.lir, label=c.label)
    ax1.set(xlabel="iteration", ylabel="LER")
    ax2.set(xlabel="iteration", ylabel="LIR")
    ax1.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--full", action="store_true", help="3000 x 10000, 180 spikes")
    parser.add_argument("--seed", type=int, default=2019)
    parser.add_argument("--out", default="out/curves")
    args = parser.parse_args()

    base = bench.FULL_SCALE if args.full else bench.DESK_SCALE
    spec = bench.InstanceSpec(m=base.m, n=base.n, spikes=base.spikes, seed=args.seed)
    curves = bench.compare_algorithms(spec, bench.DEFAULT_COMPARISON)
    os.makedirs(args.out, exist_ok=True)
    for c in curves:
        bench.write_curve_csv(args.out, c)
        re = "n/a" if c.re is None else f"{c.re:.3e}"
        print(f"{c.label:>7}: {c.termination}, IT={c.iterations}, RE={re}")
    plot(curves, os.path.join(args.out, "curves.png"))


if __name__ == "__main__":
    main()
