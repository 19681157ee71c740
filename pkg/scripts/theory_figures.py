"""Plot data for the closed-form results: the influence function of the
spatial sign correlation around the unit circle, its gross-error
sensitivity against rho, and the asymptotic variance and efficiency
curves. Writes CSV files and, with --plot, PNGs."""

import argparse
import csv
import math
from pathlib import Path

import numpy as np

from signcorr.asymptotics import (are_spatial, asv_pearson, asv_spatial_corr, ges_spatial_corr,
                                  if_spatial_corr)


def write(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    print(f"-> {path}")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out-dir", default="results")
    p.add_argument("--plot", action="store_true")
    args = p.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    theta = np.linspace(0, 2 * math.pi, 361)
    rhos = (0.0, 0.3, 0.6, 0.9)
    if_rows = [[t] + [if_spatial_corr((math.cos(t), math.sin(t)), 1.0, r) for r in rhos]
               for t in theta]
    write(out / "influence.csv", ["theta"] + [f"rho={r}" for r in rhos], if_rows)

    grid = np.linspace(-0.99, 0.99, 199)
    ges_rows = [[r, ges_spatial_corr(1.0, r), ges_spatial_corr(4.0, r)] for r in grid]
    write(out / "ges.csv", ["rho", "a=1", "a=4"], ges_rows)

    asv_rows = [[r, asv_spatial_corr(r, 1.0), asv_spatial_corr(r, 4.0), asv_pearson(r),
                 are_spatial(r, 1.0), are_spatial(r, 1.0, 1.0)] for r in grid]
    write(out / "asv.csv", ["rho", "asv_a1", "asv_a4", "asv_pearson", "are_normal", "are_kappa1"],
          asv_rows)

    if not args.plot:
        return
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 3, figsize=(13, 4))
    a = np.array(if_rows)
    for k, r in enumerate(rhos):
        axes[0].plot(a[:, 0], a[:, k + 1], label=f"rho={r}")
    axes[0].set_xlabel("angle of x")
    axes[0].set_ylabel("influence")
    axes[0].legend(fontsize=8)
    g = np.array(ges_rows)
    axes[1].plot(g[:, 0], g[:, 1], label="a=1")
    axes[1].plot(g[:, 0], g[:, 2], label="a=4")
    axes[1].set_xlabel("rho")
    axes[1].set_ylabel("gross-error sensitivity")
    axes[1].legend(fontsize=8)
    v = np.array(asv_rows)
    axes[2].plot(v[:, 0], v[:, 1], label="spatial sign, a=1")
    axes[2].plot(v[:, 0], v[:, 2], label="spatial sign, a=4")
    axes[2].plot(v[:, 0], v[:, 3], label="Pearson, normal")
    axes[2].set_xlabel("rho")
    axes[2].set_ylabel("asymptotic variance")
    axes[2].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out / "theory.png", dpi=120)
    print(f"-> {out / 'theory.png'}")


if __name__ == "__main__":
    main()
