"""Command line entry point: ``signcorr estimate | simulate | theory``.

Exit codes: 0 success, 1 some estimators failed, 2 invalid configuration
or parameters, 3 input/output error, 4 every estimator failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import platform
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, DomainError, SignCorrError

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG, EXIT_IO, EXIT_TOTAL = 0, 1, 2, 3, 4


class InputError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int | None
    version: str = __version__
    wall_clock: float = 0.0
    failures: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    argv: list = field(default_factory=list)
    platform: dict = field(default_factory=lambda: {
        "python": platform.python_version(), "numpy": np.__version__,
        "machine": platform.machine()})

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _env_seed(default):
    raw = os.environ.get("SIGNCORR_SEED")
    if raw is None or raw == "":
        return default
    try:
        v = int(raw)
    except ValueError:
        raise ConfigError(f"SIGNCORR_SEED is not an integer: {raw!r}", field="SIGNCORR_SEED")
    if not 0 <= v < 2 ** 64:
        raise ConfigError("SIGNCORR_SEED out of range", field="SIGNCORR_SEED")
    return v


# ------------------------------------------------------------------ input

def read_matrix(path, header: str = "auto") -> tuple[np.ndarray, list | None]:
    """Read a numeric CSV; the first row is a header if it is not numeric
    (``auto``) or when ``header="yes"``."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise InputError(f"{path}: no data")
    names = None

    def numeric(row):
        try:
            [float(c) for c in row]
            return True
        except ValueError:
            return False

    if header == "yes" or (header == "auto" and not numeric(rows[0])):
        names = [c.strip() for c in rows[0]]
        rows = rows[1:]
    if not rows:
        raise InputError(f"{path}: header but no data rows")
    width = len(rows[0])
    out = np.empty((len(rows), width))
    first = 2 if names is not None else 1
    for i, row in enumerate(rows):
        if len(row) != width:
            raise InputError(f"{path}: row {i + first} has {len(row)} fields, expected {width}")
        for j, c in enumerate(row):
            try:
                out[i, j] = float(c)
            except ValueError:
                raise InputError(f"{path}: row {i + first}, column {j + 1}: "
                                 f"not a number: {c!r}") from None
            if not math.isfinite(out[i, j]):
                raise InputError(f"{path}: row {i + first}, column {j + 1}: non-finite value")
    if width < 2:
        raise InputError(f"{path}: need at least two columns")
    return out, names


# --------------------------------------------------------------- commands

def cmd_estimate(args) -> int:
    from .distributions import SeedSpec
    from .estimators import estimate_many, resolve_ids
    from .highdim import pairwise_corr_matrix, psd_repair, write_corr_matrix
    from .sscm import sscorr_ci

    t0 = time.perf_counter()
    ids = resolve_ids(args.estimators)
    seed = _env_seed(args.seed)
    x, names = read_matrix(args.input, args.header)
    n, p = x.shape
    out_lines = []
    failures = []
    if p == 2:
        res = estimate_many(x, ids, seed=SeedSpec(seed))
        w = csv.writer(buf := io.StringIO(), lineterminator="\n")
        w.writerow(["estimator", "value", "ci_low", "ci_high", "n", "status"])
        for e, r in res.items():
            if isinstance(r, Exception):
                failures.append({"estimator": e, "error": str(r)})
                w.writerow([e, "", "", "", n, f"error: {r}"])
                continue
            if e in ("spatial_sign", "spatial_sign_2s"):
                r = sscorr_ci(r, n, args.level, two_stage=(e == "spatial_sign_2s"))
            lo = "" if r.ci_low is None else repr(r.ci_low)
            hi = "" if r.ci_high is None else repr(r.ci_high)
            w.writerow([e, repr(r.value), lo, hi, n, "ok"])
        text = buf.getvalue()
        outputs = []
        if args.output:
            Path(args.output).write_text(text, encoding="utf-8")
            outputs.append(str(args.output))
        else:
            sys.stdout.write(text)
        total = len(ids)
    else:
        if len(ids) != 1:
            raise ConfigError("matrix input takes exactly one estimator", field="estimators")
        cm = pairwise_corr_matrix(x, ids[0], parallel=args.workers != 1,
                                  workers=args.workers, seed=SeedSpec(seed))
        if args.repair:
            cm = psd_repair(cm)
        failures = cm.warnings
        total = cm.pairs_evaluated
        outputs = []
        if args.output:
            outputs = [str(args.output), write_corr_matrix(cm, args.output)]
        else:
            np.savetxt(sys.stdout, cm.values, delimiter=",", fmt="%.17g")
    if args.output:
        man = RunManifest("estimate", {"input": str(args.input), "estimators": ids,
                                       "level": args.level, "header": args.header,
                                       "repair": bool(args.repair)},
                          seed, wall_clock=time.perf_counter() - t0, failures=failures,
                          outputs=outputs, argv=sys.argv[1:])
        man.write(str(args.output) + ".manifest.json")
    for f in failures:
        print(f"warning: {f}", file=sys.stderr)
    if failures:
        return EXIT_TOTAL if len(failures) >= total else EXIT_PARTIAL
    return EXIT_OK


def _load_config(args):
    from .simulation import ScenarioConfig, preset

    if args.config:
        try:
            obj = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}", field="config") from exc
        if isinstance(obj, dict) and obj.get("command") == "simulate" and "config" in obj:
            obj = obj["config"]  # a run manifest
        cfg = ScenarioConfig.from_json(obj)
    elif args.preset:
        cfg = preset(args.preset)
    else:
        raise ConfigError("give --preset or --config", field="preset")
    if args.reps is not None:
        cfg.reps = args.reps
    if args.estimators is not None:
        cfg.estimators = args.estimators
    if args.seed is not None:
        cfg.seed = args.seed
    cfg.seed = _env_seed(cfg.seed)
    cfg.validate()
    return cfg


def cmd_simulate(args) -> int:
    from .simulation import result_to_json, run_scenario, write_csv

    cfg = _load_config(args)
    out_dir = Path(args.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputError(f"cannot create {out_dir}: {exc}") from exc
    name = args.name or (args.preset or cfg.scenario)
    workers = args.workers or os.cpu_count() or 1

    def progress(done, total):
        if args.progress:
            print(f"\r{done}/{total} tasks", end="" if done < total else "\n", file=sys.stderr)

    res = run_scenario(cfg, workers=workers, progress=progress)
    csv_path = out_dir / f"{name}.csv"
    json_path = out_dir / f"{name}.json"
    try:
        write_csv(res, csv_path)
        json_path.write_text(json.dumps(result_to_json(res), indent=1) + "\n", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot write results: {exc}") from exc
    failures = [{"estimator": r["estimator"], "param_name": r["param_name"],
                 "param_value": r["param_value"], "n": r["n"], "rho": r["rho"],
                 "failures": r["reps"] - r["successes"]}
                for r in res.rows if r["successes"] < r["reps"]]
    RunManifest("simulate", cfg.to_json(), cfg.seed, wall_clock=res.wall_clock,
                failures=failures, outputs=[str(csv_path), str(json_path)],
                argv=sys.argv[1:]).write(out_dir / f"{name}.manifest.json")
    print(f"wrote {csv_path} ({len(res.rows)} rows) in {res.wall_clock:.1f} s", file=sys.stderr)
    if failures:
        if all(r["successes"] == 0 for r in res.rows):
            return EXIT_TOTAL
        return EXIT_PARTIAL
    return EXIT_OK


def _theory_grid(args):
    from . import asymptotics as A

    q = args.quantity
    rows = []
    if q in ("asv", "are"):
        header = ["rho", "a", "kappa", q]
        for a in np.geomspace(0.125, 8.0, 25):
            for rho in np.linspace(-0.99, 0.99, 199):
                v = (A.asv_spatial_corr(rho, a) if q == "asv"
                     else A.are_spatial(rho, a, args.kappa))
                rows.append([rho, a, args.kappa, v])
    elif q == "ges":
        header = ["rho", "a", "ges"]
        for rho in np.linspace(-0.99, 0.99, 199):
            rows.append([rho, args.a, A.ges_spatial_corr(args.a, rho)])
    elif q == "if":
        header = ["theta", "x1", "x2", "a", "rho", "if"]
        for k in range(args.points):
            th = 2.0 * math.pi * k / args.points
            x = (math.cos(th), math.sin(th))
            rows.append([th, x[0], x[1], args.a, args.rho, A.if_spatial_corr(x, args.a, args.rho)])
    else:
        raise ConfigError(f"--grid is not available for {q}", field="grid")
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) for v in r])


def cmd_theory(args) -> int:
    from . import asymptotics as A

    if args.grid:
        _theory_grid(args)
        return EXIT_OK
    q = args.quantity
    if q == "asv":
        print(repr(A.asv_spatial_corr(args.rho, args.a)))
    elif q == "are":
        print(repr(A.are_spatial(args.rho, args.a, args.kappa)))
    elif q == "ges":
        print(repr(A.ges_spatial_corr(args.a, args.rho)))
    elif q == "if":
        if args.x is None:
            raise ConfigError("if needs --x X1 X2", field="x")
        print(repr(A.if_spatial_corr(args.x, args.a, args.rho)))
    elif q == "ws":
        u = None
        if args.u is not None:
            u = np.array(args.u, dtype=float).reshape(2, 2)
        np.savetxt(sys.stdout, A.ws_matrix(args.lambda1, args.lambda2, u), fmt="%.17g",
                   delimiter=",")
    else:
        np.savetxt(sys.stdout, A.wv0_matrix(args.a, args.rho), fmt="%.17g", delimiter=",")
    return EXIT_OK


# ------------------------------------------------------------------ parser

def _ids(text):
    return [s.strip() for s in text.split(",") if s.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="signcorr", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("estimate", help="correlation estimates from a CSV file")
    e.add_argument("input")
    e.add_argument("-e", "--estimators", type=_ids, default=["spatial_sign"],
                   help="comma separated ids, 'all' or 'closed_form'")
    e.add_argument("--header", choices=("auto", "yes", "no"), default="auto")
    e.add_argument("--level", type=float, default=0.95)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--workers", type=int, default=None)
    e.add_argument("--repair", action="store_true", help="repair matrix output to PSD")
    e.add_argument("-o", "--output")
    e.set_defaults(func=cmd_estimate)

    s = sub.add_parser("simulate", help="run a Monte Carlo scenario")
    s.add_argument("--preset", choices=("table2", "fig3", "fig4", "fig5", "fig6", "fig7"))
    s.add_argument("--config", help="scenario JSON or a run manifest")
    s.add_argument("--reps", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("-e", "--estimators", type=_ids)
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--out-dir", default=".")
    s.add_argument("--name")
    s.add_argument("--progress", action="store_true")
    s.set_defaults(func=cmd_simulate)

    t = sub.add_parser("theory", help="closed-form asymptotic quantities")
    t.add_argument("quantity", choices=("asv", "are", "if", "ges", "ws", "wv0"))
    t.add_argument("--rho", type=float, default=0.0)
    t.add_argument("--a", type=float, default=1.0)
    t.add_argument("--kappa", type=float, default=0.0)
    t.add_argument("--x", type=float, nargs=2)
    t.add_argument("--lambda1", type=float, default=1.0)
    t.add_argument("--lambda2", type=float, default=1.0)
    t.add_argument("--u", type=float, nargs=4, help="eigenvector matrix, row major")
    t.add_argument("--grid", action="store_true", help="emit plot data as CSV")
    t.add_argument("--points", type=int, default=360)
    t.set_defaults(func=cmd_theory)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SignCorrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOTAL
    except BrokenPipeError:
        # downstream reader closed early, e.g. piped into head
        sys.stderr.close()
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
