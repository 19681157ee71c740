"""Bias under replacement contamination, m of n = 100 points replaced."""

from pathlib import Path

from _common import parser, plot_curves, run_preset


def main():
    args = parser("fig6").parse_args()
    res = run_preset("fig6", args)
    for e in res.config.estimators:
        print(f"{e:<15} m=20: bias {res.row(e, m=20.0)['bias']:+.4f}")
    if args.plot:
        plot_curves(res, "bias", "bias", Path(args.out_dir, "fig6.png"))


if __name__ == "__main__":
    main()
