"""Estimator implementations and the id -> callable registry."""

from __future__ import annotations

from typing import Callable

from ..errors import ConfigError, SignCorrError
from ..sscm import spatial_sign_corr, two_stage_spatial_sign_corr
from ..types import CorrEstimate
from .affine import (corr_from_cov, mcd, mcd_both, s_estimator, stahel_donoho,
                     tyler_shape)
from .gk import gk_corr
from .nonparametric import (gaussian_rank_corr, kendall_corr, pearson,
                            quadrant_corr, spearman_corr)
from .scale import mad, qn, tau_scale

__all__ = [
    "ESTIMATOR_IDS", "CLOSED_FORM_IDS", "AFFINE_IDS", "EXTRA_IDS",
    "estimate", "estimate_many", "get_estimator", "resolve_ids",
    "pearson", "spatial_sign_corr", "quadrant_corr", "kendall_corr", "spearman_corr",
    "gaussian_rank_corr", "gk_corr", "tyler_shape", "mcd", "stahel_donoho",
    "s_estimator", "corr_from_cov", "mad", "qn", "tau_scale",
]

# estimators compared in the simulations, in table order
ESTIMATOR_IDS = (
    "pearson", "spatial_sign", "quadrant", "kendall", "spearman", "gaussian_rank",
    "gk_qn", "gk_tau", "tyler", "rmcd", "wmcd", "s", "stahel_donoho",
)
AFFINE_IDS = ("tyler", "rmcd", "wmcd", "s", "stahel_donoho")
CLOSED_FORM_IDS = tuple(e for e in ESTIMATOR_IDS if e not in AFFINE_IDS)
EXTRA_IDS = ("spatial_sign_2s",)
RANDOMIZED_IDS = ("rmcd", "wmcd", "s", "stahel_donoho")


def _corr_only(fn, **kw):
    def run(data, seed=None):
        return fn(data, **kw)
    return run


def _seeded(fn, **kw):
    def run(data, seed=None):
        return fn(data, seed=seed, **kw)[1]
    return run


_REGISTRY: dict[str, Callable] = {
    "pearson": _corr_only(pearson),
    "spatial_sign": _corr_only(spatial_sign_corr),
    "quadrant": _corr_only(quadrant_corr),
    "kendall": _corr_only(kendall_corr),
    "spearman": _corr_only(spearman_corr),
    "gaussian_rank": _corr_only(gaussian_rank_corr),
    "gk_qn": _corr_only(gk_corr, scale="qn"),
    "gk_tau": _corr_only(gk_corr, scale="tau"),
    "tyler": lambda data, seed=None: tyler_shape(data)[1],
    "rmcd": _seeded(mcd, reweight=False),
    "wmcd": _seeded(mcd, reweight=True),
    "s": _seeded(s_estimator),
    "stahel_donoho": _seeded(stahel_donoho),
    "spatial_sign_2s": _corr_only(two_stage_spatial_sign_corr),
}


def resolve_ids(ids) -> list[str]:
    """Expand ``"all"`` / ``"closed_form"`` and validate ids, keeping order."""
    if isinstance(ids, str):
        ids = [s.strip() for s in ids.split(",") if s.strip()]
    out: list[str] = []
    for e in ids:
        if e == "all":
            out.extend(ESTIMATOR_IDS)
        elif e == "closed_form":
            out.extend(CLOSED_FORM_IDS)
        elif e in _REGISTRY:
            out.append(e)
        else:
            raise ConfigError(f"unknown estimator id {e!r}", field="estimators")
    seen = set()
    return [e for e in out if not (e in seen or seen.add(e))]


def get_estimator(ident: str) -> Callable:
    try:
        return _REGISTRY[ident]
    except KeyError:
        raise ConfigError(f"unknown estimator id {ident!r}", field="estimators") from None


def estimate(data, ident: str, seed=None) -> CorrEstimate:
    return get_estimator(ident)(data, seed=seed)


def _child(seed, ident):
    # each randomized estimator gets its own substream
    if seed is None:
        return None
    from ..distributions import SeedSpec
    if isinstance(seed, int):
        seed = SeedSpec(seed)
    return seed.child("est", ident) if isinstance(seed, SeedSpec) else seed


def estimate_many(data, ids, seed=None, errors: str = "record") -> dict:
    """Run several estimators on one data set.

    Returns id -> CorrEstimate, or id -> exception when ``errors="record"``.
    Raw and weighted MCD share a single subset search.
    """
    ids = resolve_ids(ids)
    out: dict = {}
    both = "rmcd" in ids and "wmcd" in ids
    for e in ids:
        if e in out:
            continue
        try:
            if both and e in ("rmcd", "wmcd"):
                raw, wtd = mcd_both(data, seed=_child(seed, "mcd"))
                out["rmcd"], out["wmcd"] = raw, wtd
                continue
            sub = _child(seed, "mcd" if e in ("rmcd", "wmcd") else e)
            out[e] = estimate(data, e, seed=sub)
        except SignCorrError as exc:
            if errors != "record":
                raise
            if both and e in ("rmcd", "wmcd"):
                out["rmcd"] = out["wmcd"] = exc
            else:
                out[e] = exc
    return {e: out[e] for e in ids}
