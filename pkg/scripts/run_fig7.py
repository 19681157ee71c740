"""Bias against rho under the skewed exponential model."""

from pathlib import Path

from _common import parser, plot_curves, run_preset


def main():
    args = parser("fig7").parse_args()
    res = run_preset("fig7", args)
    for r in res.rows:
        if r["estimator"] in ("pearson", "spatial_sign", "kendall"):
            print(f"{r['estimator']:<13} rho={r['rho']:.1f}  bias {r['bias']:+.4f}")
    if args.plot:
        plot_curves(res, "bias", "bias", Path(args.out_dir, "fig7.png"))


if __name__ == "__main__":
    main()
