"""Shared plumbing for the experiment scripts."""

import argparse
import os
import sys
from pathlib import Path

from signcorr.simulation import preset, run_scenario, write_csv


def parser(name, reps=2000):
    p = argparse.ArgumentParser(description=f"run the {name} preset")
    p.add_argument("--reps", type=int, default=reps)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-e", "--estimators", default=None, help="comma separated ids")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out-dir", default="results")
    p.add_argument("--plot", action="store_true", help="save a PNG (needs matplotlib)")
    return p


def run_preset(name, args, **overrides):
    cfg = preset(name, reps=args.reps, seed=args.seed)
    if args.estimators:
        cfg.estimators = [s.strip() for s in args.estimators.split(",")]
    for k, v in overrides.items():
        setattr(cfg, k, v)
    cfg.validate()

    def progress(done, total):
        print(f"\r{name}: {done}/{total}", end="\n" if done == total else "", file=sys.stderr)

    res = run_scenario(cfg, workers=args.workers, progress=progress)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(res, out / f"{name}.csv")
    print(f"{name}: {len(res.rows)} rows in {res.wall_clock:.1f} s -> {out / (name + '.csv')}")
    return res


def curves(res, key="mean"):
    """{estimator: (x, y)} along the swept parameter."""
    out = {}
    for r in res.rows:
        xs, ys = out.setdefault(r["estimator"], ([], []))
        xs.append(r["param_value"])
        ys.append(r[key])
    return out


def plot_curves(res, key, ylabel, path, logx=False):
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not installed, skipping the plot", file=sys.stderr)
        return
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for e, (x, y) in curves(res, key).items():
        ax.plot(x, y, label=e, lw=2.2 if e == "spatial_sign" else 1.0)
    if logx:
        ax.set_xscale("log")
    ax.set_xlabel(res.rows[0]["param_name"])
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    print(f"plot -> {path}")
