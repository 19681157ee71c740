"""Monte Carlo engine for the bivariate comparison scenarios.

A scenario is a grid of parameter cells; every (cell, replication) pair
owns an independent RNG stream derived from the master seed, so results do
not depend on how replications are split among worker processes.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import multiprocessing as mp
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .distributions import (SeedSpec, contaminate_replace, contaminate_shift, sample_normal2,
                            sample_powerexp2, sample_skewed_exp, sample_t2, sigma_from_rho,
                            transform, uniforms)
from .errors import ConfigError, DomainError, SignCorrError
from .estimators import ESTIMATOR_IDS, estimate, resolve_ids
from .estimators.affine import mcd_both
from .estimators.batch import BATCH_IDS, batch_estimate

__all__ = [
    "SCENARIOS", "PRESETS", "CSV_COLUMNS", "ScenarioConfig", "ScenarioResult", "SummaryRow",
    "derive_seed", "aggregate", "run_scenario", "sensitivity_curve", "preset",
    "write_csv", "read_csv", "result_to_json",
]

CONFIG_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class _ScenarioDef:
    keys: tuple          # grid axes, outermost first
    param: str           # axis reported as param_name / param_value
    defaults: dict
    sweep: str | None = None  # axis along which replications share base data


SCENARIOS = {
    "NormalBiasVar": _ScenarioDef(("rho", "n"), "n", {"rho": [0.5]}),
    "TnuMSE": _ScenarioDef(("rho", "nu", "n"), "nu", {"n": [100]}),
    "PowerExpMSE": _ScenarioDef(("rho", "alpha", "n"), "alpha", {"rho": [0.5], "n": [100]}),
    "SingleOutlier": _ScenarioDef(("rho", "n", "h"), "h", {"rho": [0.5], "n": [100]}, "h"),
    "ReplacementContamination": _ScenarioDef(
        ("rho", "n", "m"), "m", {"rho": [0.5], "n": [100]}, "m"),
    "SkewedExp": _ScenarioDef(("rho", "n"), "rho", {"n": [100]}),
}

# outliers replacing good observations: variances 4, correlation -0.5
CONTAM_SIGMA = sigma_from_rho(-0.5, 4.0, 4.0)


def _is_num(v):
    return isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool)


def derive_seed(master, scenario_id: str, grid_index: int, replication_index: int) -> SeedSpec:
    master = master if isinstance(master, SeedSpec) else SeedSpec(int(master))
    return master.child(scenario_id, int(grid_index), int(replication_index))


@dataclass
class ScenarioConfig:
    scenario: str
    grid: dict
    estimators: list = field(default_factory=lambda: list(ESTIMATOR_IDS))
    reps: int = 2000
    seed: int = 20240101
    base_mode: str = "single"  # SingleOutlier: one fixed base draw, or "averaged" over reps

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}", field="scenario")
        if not isinstance(self.reps, int) or self.reps < 1:
            raise ConfigError("reps must be a positive integer", field="reps")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer", field="seed")
        if self.base_mode not in ("averaged", "single"):
            raise ConfigError("base_mode must be 'averaged' or 'single'", field="base_mode")
        d = SCENARIOS[self.scenario]
        unknown = set(self.grid) - set(d.keys)
        if unknown:
            raise ConfigError(f"grid axes {sorted(unknown)} not used by {self.scenario}",
                              field="grid")
        for k in d.keys:
            vals = self.axis(k)
            if len(vals) == 0:
                raise ConfigError(f"grid axis {k!r} is empty", field=f"grid.{k}")
        for n in self.axis("n"):
            if not _is_num(n) or int(n) != n or n < 2:
                raise ConfigError("n must be an integer >= 2", field="grid.n")
        if self.scenario == "SkewedExp":
            rho_ok = (lambda v: 0.0 <= v < 1.0, "rho must lie in [0, 1)")
        else:
            rho_ok = (lambda v: abs(v) < 1.0, "rho must lie in (-1, 1)")
        checks = {"rho": rho_ok,
                  "nu": (lambda v: v > 0, "nu must be positive"),
                  "alpha": (lambda v: v > 0, "alpha must be positive"),
                  "h": (math.isfinite, "h must be finite"),
                  "m": (lambda v: int(v) == v and 0 <= v <= min(self.axis("n")),
                        "m must be an integer between 0 and n")}
        for k in d.keys:
            if k not in checks:
                continue
            ok, msg = checks[k]
            for v in self.axis(k):
                if not _is_num(v) or not math.isfinite(v) or not ok(v):
                    raise ConfigError(f"{msg}, got {v!r}", field=f"grid.{k}")
        self.estimators = resolve_ids(self.estimators)
        if not self.estimators:
            raise ConfigError("no estimators selected", field="estimators")

    def axis(self, key):
        d = SCENARIOS[self.scenario]
        vals = self.grid.get(key, d.defaults.get(key))
        if vals is None:
            raise ConfigError(f"grid axis {key!r} missing", field=f"grid.{key}")
        if np.isscalar(vals):
            vals = [vals]
        return list(vals)

    def cells(self) -> list[dict]:
        d = SCENARIOS[self.scenario]
        axes = [self.axis(k) for k in d.keys]
        return [dict(zip(d.keys, combo)) for combo in itertools.product(*axes)]

    def to_json(self) -> dict:
        d = SCENARIOS[self.scenario]
        return {"schema_version": CONFIG_SCHEMA_VERSION, "scenario": self.scenario,
                "grid": {k: self.axis(k) for k in d.keys}, "estimators": list(self.estimators),
                "reps": self.reps, "seed": self.seed, "base_mode": self.base_mode}

    @classmethod
    def from_json(cls, obj: dict) -> "ScenarioConfig":
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
        version = obj.get("schema_version")
        if version != CONFIG_SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {version!r}", field="schema_version")
        allowed = {"schema_version", "scenario", "grid", "estimators", "reps", "seed",
                   "base_mode", "preset"}
        extra = set(obj) - allowed
        if extra:
            raise ConfigError(f"unknown config fields {sorted(extra)}", field=sorted(extra)[0])
        if "preset" in obj:
            cfg = preset(obj["preset"], reps=obj.get("reps"), seed=obj.get("seed"))
            if "estimators" in obj:
                cfg.estimators = obj["estimators"]
            if "base_mode" in obj:
                cfg.base_mode = obj["base_mode"]
            cfg.validate()
            return cfg
        for key in ("scenario", "grid"):
            if key not in obj:
                raise ConfigError(f"missing field {key!r}", field=key)
        if not isinstance(obj["grid"], dict):
            raise ConfigError("grid must be an object", field="grid")
        return cls(scenario=obj["scenario"], grid=dict(obj["grid"]),
                   estimators=obj.get("estimators", list(ESTIMATOR_IDS)),
                   reps=obj.get("reps", 2000), seed=obj.get("seed", 20240101),
                   base_mode=obj.get("base_mode", "single"))


PRESETS = {
    "table2": ("TnuMSE", {"rho": [0.0, 0.5], "nu": [1, 2, 5, 10], "n": [100]}),
    "fig3": ("NormalBiasVar", {"rho": [0.5], "n": list(range(5, 101, 5))}),
    "fig4": ("PowerExpMSE", {"rho": [0.5], "alpha": [float(a) for a in np.geomspace(0.02, 2.0, 56)],
                             "n": [100]}),
    "fig5": ("SingleOutlier", {"rho": [0.5], "n": [100], "h": [0.25 * k for k in range(21)]}),
    "fig6": ("ReplacementContamination", {"rho": [0.5], "n": [100], "m": list(range(0, 51, 5))}),
    "fig7": ("SkewedExp", {"rho": [round(0.1 * k, 1) for k in range(1, 10)], "n": [100]}),
}


def preset(name: str, reps: int | None = None, seed: int | None = None,
           estimators=None) -> ScenarioConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}", field="preset")
    scen, grid = PRESETS[name]
    # the sensitivity figure shows smooth mean curves, so its preset averages base draws
    return ScenarioConfig(scen, {k: list(v) for k, v in grid.items()},
                          estimators=list(ESTIMATOR_IDS) if estimators is None else estimators,
                          reps=2000 if reps is None else reps,
                          seed=20240101 if seed is None else seed,
                          base_mode="averaged" if scen == "SingleOutlier" else "single")


# ------------------------------------------------------------- aggregation

@dataclass(frozen=True)
class SummaryRow:
    reps: int
    successes: int
    mean: float
    bias: float
    variance: float
    mse: float
    mc_se_mean: float
    mc_se_mse: float

    @property
    def failures(self) -> int:
        return self.reps - self.successes


def aggregate(estimates, truth: float, reps: int | None = None) -> SummaryRow:
    """Summary of the finite entries of ``estimates``; NaN marks a failure.

    Sums are exactly rounded (math.fsum) so the row does not depend on the
    order of accumulation beyond the order of ``estimates`` itself.
    """
    v = np.asarray(estimates, dtype=float).ravel()
    total = v.size if reps is None else int(reps)
    ok = v[np.isfinite(v)]
    k = ok.size
    if total == 0:
        raise DomainError("no estimates to aggregate")
    if k == 0:
        nan = float("nan")
        return SummaryRow(total, 0, nan, nan, nan, nan, nan, nan)
    mean = math.fsum(ok) / k
    err2 = (ok - truth) ** 2
    mse = math.fsum(err2) / k
    if k > 1:
        var = math.fsum((ok - mean) ** 2) / (k - 1)
        mse_mean = mse
        # jackknife standard error of a mean of squared errors
        se_mse = math.sqrt(math.fsum((err2 - mse_mean) ** 2) / (k - 1) / k)
        se_mean = math.sqrt(var / k)
    else:
        var = se_mse = se_mean = float("nan")
    return SummaryRow(total, k, mean, mean - truth, var, mse, se_mean, se_mse)


# ---------------------------------------------------------------- running

def _truth(scenario: str, cell: dict) -> float:
    return 0.0 if scenario == "SingleOutlier" else float(cell["rho"])


def _draw(scenario: str, cell: dict, seed: SeedSpec) -> np.ndarray:
    n = int(cell["n"])
    rho = float(cell["rho"])
    data_seed = seed.child("data")
    if scenario in ("NormalBiasVar", "SingleOutlier", "ReplacementContamination"):
        x = sample_normal2(sigma_from_rho(rho), n, data_seed)
        if scenario == "ReplacementContamination":
            x = contaminate_replace(x, int(cell["m"]), CONTAM_SIGMA, seed.child("contam"))
        return x
    if scenario == "TnuMSE":
        return sample_t2(sigma_from_rho(rho), float(cell["nu"]), n, data_seed)
    if scenario == "PowerExpMSE":
        return sample_powerexp2(sigma_from_rho(rho), float(cell["alpha"]), n, data_seed)
    return sample_skewed_exp(rho, n, data_seed)


def _model(scenario: str, cell: dict):
    rho = float(cell["rho"])
    if scenario == "TnuMSE":
        return "t", dict(sigma=sigma_from_rho(rho), param=float(cell["nu"]))
    if scenario == "PowerExpMSE":
        return "powerexp", dict(sigma=sigma_from_rho(rho), param=float(cell["alpha"]))
    if scenario == "SkewedExp":
        return "skewed", dict(rho=rho)
    return "normal", dict(sigma=sigma_from_rho(rho))


def _draw_stack(scenario: str, cell: dict, seeds) -> np.ndarray:
    """Same samples as ``_draw`` for each seed, transformed in one call."""
    n = int(cell["n"])
    kind, kw = _model(scenario, cell)
    u = np.stack([uniforms(s.child("data"), n, kind) for s in seeds])
    xs = transform(u, kind, **kw)
    if scenario == "ReplacementContamination":
        m = int(cell["m"])
        if m > 0:
            uc = np.stack([uniforms(s.child("contam"), n, "normal") for s in seeds])
            xs[:, :m] = transform(uc, "normal", sigma=CONTAM_SIGMA)[:, :m]
    return np.ascontiguousarray(xs)


def _evaluate(xs: np.ndarray, ids, seeds) -> dict:
    """Estimates of every id on every sample of the stack; NaN on failure."""
    out = {}
    k = xs.shape[0]
    slow = [e for e in ids if e not in BATCH_IDS]
    for e in ids:
        if e in BATCH_IDS:
            v, st = batch_estimate(xs, e)
            out[e] = np.where(st == 0, v, np.nan)
    if slow:
        for e in slow:
            out[e] = np.full(k, np.nan)
        both = "rmcd" in slow and "wmcd" in slow
        for i in range(k):
            if both:
                try:
                    raw, wtd = mcd_both(xs[i], seed=seeds[i].child("est", "mcd"))
                    out["rmcd"][i] = raw.value
                    out["wmcd"][i] = wtd.value
                except SignCorrError:
                    pass
            for e in slow:
                if both and e in ("rmcd", "wmcd"):
                    continue
                key = "mcd" if e in ("rmcd", "wmcd") else e
                try:
                    out[e][i] = estimate(xs[i], e, seed=seeds[i].child("est", key)).value
                except SignCorrError:
                    pass
    return out


def _groups(cfg: ScenarioConfig):
    """Cells sharing base data: all sweep values of a curve scenario, else singletons."""
    d = SCENARIOS[cfg.scenario]
    cells = cfg.cells()
    if d.sweep is None:
        return [[g] for g in range(len(cells))]
    groups: dict = {}
    for g, c in enumerate(cells):
        base = tuple((k, c[k]) for k in d.keys if k != d.sweep)
        groups.setdefault(base, []).append(g)
    return list(groups.values())


def _run_task(cfg_json: dict, group: list, lo: int, hi: int):
    cfg = ScenarioConfig.from_json(cfg_json)
    cells = cfg.cells()
    master = SeedSpec(cfg.seed)
    scen = cfg.scenario
    d = SCENARIOS[scen]
    results = {}
    if d.sweep is None:
        g = group[0]
        seeds = [derive_seed(master, scen, g, r) for r in range(lo, hi)]
        xs = _draw_stack(scen, cells[g], seeds)
        results[g] = _evaluate(xs, cfg.estimators, seeds)
        return results
    # curve scenarios: base stream indexed by the first cell of the group
    base_g = group[0]
    single = scen == "SingleOutlier" and cfg.base_mode == "single"
    reps = [0] if single else range(lo, hi)
    seeds = [derive_seed(master, scen, base_g, r) for r in reps]
    if scen == "SingleOutlier":
        base = _draw_stack(scen, cells[base_g], seeds)
        ref = _evaluate(base, cfg.estimators, seeds)
        for g in group:
            h = float(cells[g]["h"])
            xs = base.copy()
            xs[:, 0, 0] += h
            est = _evaluate(xs, cfg.estimators, seeds)
            results[g] = {e: est[e] - ref[e] for e in cfg.estimators}
    else:
        for g in group:
            xs = _draw_stack(scen, cells[g], seeds)
            results[g] = _evaluate(xs, cfg.estimators, seeds)
    if single:
        # every replication sees the same base draw
        results = {g: {e: np.repeat(v, hi - lo) for e, v in est.items()}
                   for g, est in results.items()}
    return results


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    rows: list          # dicts keyed by CSV_COLUMNS
    wall_clock: float = 0.0

    @property
    def failures(self) -> dict:
        return {(r["param_value"], r["rho"], r["n"], r["estimator"]): r["reps"] - r["successes"]
                for r in self.rows}

    def row(self, estimator: str, **cell):
        for r in self.rows:
            if r["estimator"] == estimator and all(
                    r.get(k) == v or (k not in r and r["param_name"] == k and r["param_value"] == v)
                    for k, v in cell.items()):
                return r
        raise KeyError((estimator, cell))


CSV_COLUMNS = ("scenario", "estimator", "param_name", "param_value", "n", "rho", "reps",
               "successes", "mean", "bias", "variance", "n_times_variance", "mse",
               "mc_se_mean", "mc_se_mse")


def _warm_up():
    # compile every kernel once before forking workers
    x = sample_normal2(sigma_from_rho(0.3), 12, SeedSpec(0))
    xs = x[None]
    for e in BATCH_IDS:
        batch_estimate(xs, e)
    for e in ESTIMATOR_IDS:
        try:
            estimate(x, e, seed=SeedSpec(0))
        except SignCorrError:
            pass


def run_scenario(cfg: ScenarioConfig, workers: int = 1, chunk: int = 250,
                 progress=None) -> ScenarioResult:
    """Run every cell and replication of ``cfg`` and aggregate per cell and estimator."""
    cfg.validate()
    t0 = time.perf_counter()
    cells = cfg.cells()
    groups = _groups(cfg)
    tasks = [(grp, lo, min(lo + chunk, cfg.reps))
             for grp in groups for lo in range(0, cfg.reps, chunk)]
    cfg_json = cfg.to_json()
    values = {g: {e: np.full(cfg.reps, np.nan) for e in cfg.estimators} for g in range(len(cells))}

    def store(task, res):
        _, lo, hi = task
        for g, est in res.items():
            for e, v in est.items():
                values[g][e][lo:hi] = v

    if workers <= 1:
        for i, t in enumerate(tasks):
            store(t, _run_task(cfg_json, *t))
            if progress:
                progress(i + 1, len(tasks))
    else:
        _warm_up()
        ctx = mp.get_context("fork")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            futs = [pool.submit(_run_task, cfg_json, *t) for t in tasks]
            for i, (t, f) in enumerate(zip(tasks, futs)):
                store(t, f.result())
                if progress:
                    progress(i + 1, len(tasks))
    d = SCENARIOS[cfg.scenario]
    rows = []
    for g, cell in enumerate(cells):
        truth = _truth(cfg.scenario, cell)
        for e in cfg.estimators:
            s = aggregate(values[g][e], truth, reps=cfg.reps)
            rows.append({
                "scenario": cfg.scenario, "estimator": e, "param_name": d.param,
                "param_value": float(cell[d.param]), "n": int(cell["n"]),
                "rho": float(cell["rho"]), "reps": s.reps, "successes": s.successes,
                "mean": s.mean, "bias": s.bias, "variance": s.variance,
                "n_times_variance": int(cell["n"]) * s.variance, "mse": s.mse,
                "mc_se_mean": s.mc_se_mean, "mc_se_mse": s.mc_se_mse,
            })
    res = ScenarioResult(cfg, rows, time.perf_counter() - t0)
    res.values = values
    return res


def sensitivity_curve(base_data, estimator: str, h_grid, seed=None) -> np.ndarray:
    """estimate(shifted by h) - estimate(base) for each h; NaN where it fails."""
    x = np.asarray(base_data, dtype=float)
    try:
        ref = estimate(x, estimator, seed=seed).value
    except SignCorrError:
        return np.full(len(h_grid), np.nan)
    out = np.empty(len(h_grid))
    for i, h in enumerate(h_grid):
        try:
            out[i] = estimate(contaminate_shift(x, h), estimator, seed=seed).value - ref
        except SignCorrError:
            out[i] = np.nan
    return out


# ------------------------------------------------------------------ output

def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_csv(result: ScenarioResult, path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in result.rows:
        w.writerow([_fmt(r[c]) for c in CSV_COLUMNS])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


_INT_COLS = {"n", "reps", "successes"}
_STR_COLS = {"scenario", "estimator", "param_name"}


def read_csv(path_or_text) -> list[dict]:
    """Parse a result CSV written by :func:`write_csv`."""
    if isinstance(path_or_text, str) and "\n" in path_or_text:
        text = path_or_text
    else:
        with open(path_or_text, encoding="utf-8") as fh:
            text = fh.read()
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ConfigError("unexpected CSV header", field="header")
    rows = []
    for rec in reader:
        rows.append({c: rec[c] if c in _STR_COLS else int(rec[c]) if c in _INT_COLS
                     else float(rec[c]) for c in CSV_COLUMNS})
    return rows


def result_to_json(result: ScenarioResult) -> dict:
    return {"config": result.config.to_json(),
            "rows": [{c: r[c] for c in CSV_COLUMNS} for r in result.rows]}
