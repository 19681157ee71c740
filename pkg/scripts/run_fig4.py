"""MSE against the power exponential shape parameter alpha (log scale)."""

from pathlib import Path

from _common import parser, plot_curves, run_preset


def main():
    args = parser("fig4").parse_args()
    res = run_preset("fig4", args)
    ss = [r["mse"] for r in res.rows if r["estimator"] == "spatial_sign"]
    print(f"spatial sign MSE over alpha: min {min(ss):.4f}, max {max(ss):.4f}")
    if args.plot:
        plot_curves(res, "mse", "MSE", Path(args.out_dir, "fig4.png"), logx=True)


if __name__ == "__main__":
    main()
