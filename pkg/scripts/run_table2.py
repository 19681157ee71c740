"""MSE under bivariate t distributions, n = 100: one row per estimator,
one column per (rho, nu) cell."""

from pathlib import Path

from _common import parser, run_preset


def main():
    args = parser("table2").parse_args()
    res = run_preset("table2", args)
    cells = sorted({(r["rho"], r["param_value"]) for r in res.rows})
    head = "".join(f"  r={rho:g},nu={nu:g}" for rho, nu in cells)
    lines = [f"{'estimator':<15}{head}"]
    for e in res.config.estimators:
        vals = "".join(f"{res.row(e, rho=rho, nu=nu)['mse']:>14.4f}" for rho, nu in cells)
        lines.append(f"{e:<15}{vals}")
    text = "\n".join(lines)
    print(text)
    Path(args.out_dir, "table2.txt").write_text(text + "\n")


if __name__ == "__main__":
    main()
