"""Sensitivity to one observation shifted to (h, -h).

By default the curve is averaged over base samples; ``--single`` uses one
fixed base sample instead."""

from pathlib import Path

from _common import parser, plot_curves, run_preset


def main():
    p = parser("fig5")
    p.add_argument("--single", action="store_true")
    args = p.parse_args()
    res = run_preset("fig5", args, base_mode="single" if args.single else "averaged")
    for e in res.config.estimators:
        print(f"{e:<15} h=5: {res.row(e, h=5.0)['mean']:+.4f}")
    if args.plot:
        plot_curves(res, "mean", "change in estimate", Path(args.out_dir, "fig5.png"))


if __name__ == "__main__":
    main()
