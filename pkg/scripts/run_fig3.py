"""Bias and n * variance against n under normality, rho = 0.5."""

from pathlib import Path

from _common import parser, plot_curves, run_preset


def main():
    args = parser("fig3").parse_args()
    res = run_preset("fig3", args)
    for r in res.rows:
        if r["estimator"] == "spatial_sign":
            print(f"n={r['n']:>4}  bias={r['bias']:+.4f}  n*var={r['n_times_variance']:.3f}")
    if args.plot:
        plot_curves(res, "n_times_variance", "n * variance", Path(args.out_dir, "fig3_var.png"))
        plot_curves(res, "bias", "bias", Path(args.out_dir, "fig3_bias.png"))


if __name__ == "__main__":
    main()
