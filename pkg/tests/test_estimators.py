import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import stats

from signcorr.distributions import SeedSpec, sample_normal2, sigma_from_rho
from signcorr.errors import ConfigError, DegeneracyError
from signcorr.estimators import (
    ESTIMATOR_IDS,
    estimate,
    estimate_many,
    get_estimator,
    resolve_ids,
)
from signcorr.estimators.gk import gk_corr
from signcorr.estimators.nonparametric import (
    gaussian_rank_corr,
    kendall_corr,
    kendall_tau_a,
    pearson,
    quadrant_corr,
    spearman_corr,
)
from signcorr.estimators.scale import MAD_CONSTANT, QN_CONSTANT, mad, qn, qn_order_stat, tau_location, tau_scale

samples = arrays(int, st.integers(5, 40), elements=st.integers(-10**6, 10**6), unique=True).map(
    lambda a: a * 1e-3)


# ------------------------------------------------------------------ scales

def test_mad_examples():
    assert mad([1, 2, 3, 4, 100]).value == 1.0
    assert mad([1, 2, 3, 4, 100], scaled=True).value == pytest.approx(MAD_CONSTANT)
    assert mad([2.5] * 7).degenerate
    z = np.random.default_rng(0).standard_normal(100_000)
    assert mad(z, scaled=True).value == pytest.approx(1.0, abs=0.02)


def test_qn_examples():
    assert QN_CONSTANT == pytest.approx(2.21914, abs=1e-5)
    assert qn([1, 2, 3, 4, 5]).value == pytest.approx(QN_CONSTANT)
    assert qn([0, 0, 0, 1]).degenerate
    z = np.random.default_rng(1).standard_normal(100_000)
    assert qn(z).value == pytest.approx(1.0, abs=0.02)


@given(samples)
def test_qn_order_stat_matches_enumeration(x):
    n = x.size
    h = n // 2 + 1
    k = h * (h - 1) // 2
    sx = np.sort(x)
    gaps = sorted(sx[j] - sx[i] for i, j in itertools.combinations(range(n), 2))
    assert qn_order_stat(x) == gaps[k - 1]


@given(samples, st.floats(-100, 100), st.floats(0.01, 100), st.booleans())
def test_scale_invariance(x, shift, c, neg):
    a = -c if neg else c
    y = a * x + shift
    for f in (lambda v: mad(v).value, lambda v: qn(v).value, lambda v: tau_scale(v).value):
        base = f(x)
        assert f(y) == pytest.approx(abs(a) * base, rel=1e-9, abs=1e-9)
    assert mad(x + shift).value == pytest.approx(mad(x).value, rel=1e-9, abs=1e-9)


def test_tau_examples():
    assert tau_location([-1.0, 0.0, 1.0], 1.0) == 0.0
    with pytest.raises(DegeneracyError):
        tau_scale([1.0, 1.0, 1.0, 2.0])


def test_tau_normal_constant():
    # population value sqrt(E min(Z^2, 9)) by direct integration
    c = 3.0
    trunc = (2 * stats.norm.cdf(c) - 1) - 2 * c * stats.norm.pdf(c)
    kappa = math.sqrt(trunc + c * c * 2 * stats.norm.sf(c))
    assert kappa == pytest.approx(0.99750, abs=1e-5)
    z = np.random.default_rng(2).standard_normal(100_000)
    assert tau_scale(z).value == pytest.approx(kappa, abs=0.02)


# ------------------------------------------------------------ rank-based

def test_pearson_examples():
    assert pearson([[1, 2], [2, 4], [3, 6]]).value == pytest.approx(1.0, abs=1e-15)
    assert pearson([[0, 0], [1, 0], [0, 1], [1, 1]]).value == 0.0
    assert pearson([[1, 2], [2, 1], [3, 3]]).value == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(DegeneracyError):
        pearson([[1, 2], [1, 3], [1, 4]])


def test_gaussian_rank_examples():
    x = np.random.default_rng(3).normal(size=50)
    assert gaussian_rank_corr(np.column_stack([x, np.exp(x)])).value == pytest.approx(1.0, abs=1e-14)
    assert gaussian_rank_corr(np.column_stack([x, -x])).value == pytest.approx(-1.0, abs=1e-14)
    big = sample_normal2(sigma_from_rho(0.5), 100_000, SeedSpec(4))
    assert gaussian_rank_corr(big).value == pytest.approx(0.5, abs=0.01)


def test_spearman_transform():
    x = np.arange(10.0)
    assert spearman_corr(np.column_stack([x, x])).value == 1.0
    perm = np.array([1, 0, 3, 2, 5, 4, 7, 6, 9, 8.0])
    est = spearman_corr(np.column_stack([x, perm]))
    assert est.value == pytest.approx(2 * math.sin(math.pi * est.diagnostics["raw"] / 6), abs=1e-15)
    assert spearman_corr(np.column_stack([x, perm]), consistent=False).value == est.diagnostics["raw"]
    assert 2 * math.sin(math.pi * 0.5 / 6) == pytest.approx(0.51764, abs=1e-5)


def test_kendall_examples():
    x = np.arange(8.0)
    assert kendall_corr(np.column_stack([x, x ** 3])).value == 1.0
    raw = kendall_corr([[1, 1], [2, 3], [3, 2]], consistent=False).value
    assert raw == pytest.approx(1 / 3, abs=1e-15)
    assert kendall_corr([[1, 1], [2, 3], [3, 2]]).value == pytest.approx(0.5, abs=1e-15)


def test_kendall_knight_equals_brute_force():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        n = int(rng.integers(2, 200))
        x, y = rng.normal(size=n), rng.normal(size=n)
        assert kendall_tau_a(x, y, method="knight") == kendall_tau_a(x, y, method="brute")


@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4)), min_size=2, max_size=80))
def test_kendall_ties(pairs):
    a = np.array(pairs, dtype=float)
    assert kendall_tau_a(a[:, 0], a[:, 1], method="knight") == kendall_tau_a(a[:, 0], a[:, 1], method="brute")
    ref = 0
    for i, j in itertools.combinations(range(len(a)), 2):
        ref += np.sign((a[i, 0] - a[j, 0]) * (a[i, 1] - a[j, 1]))
    assert kendall_tau_a(a[:, 0], a[:, 1]) == pytest.approx(2 * ref / (len(a) * (len(a) - 1)), abs=1e-15)


def test_quadrant_examples():
    assert quadrant_corr([[1, 1], [-1, -1], [1, -1], [-1, 1]]).value == 0.0
    assert quadrant_corr([[1, 1], [2, 2], [-1, -1], [-2, -2]]).value == 1.0
    # raw 0.5 maps to sin(pi / 4)
    x = [1, 2, 3, 4, -1, -2, -3, -4]
    y = [1, 2, 3, -4, -1, -2, -3, 4]
    est = quadrant_corr(np.column_stack([x, y]))
    assert est.diagnostics["raw"] == 0.5
    assert est.value == pytest.approx(math.sqrt(0.5), abs=1e-15)


def test_gk_examples():
    x = np.random.default_rng(6).normal(size=60)
    for scale in ("qn", "tau"):
        assert gk_corr(np.column_stack([x, x]), scale=scale).value == 1.0
        assert gk_corr(np.column_stack([x, -x]), scale=scale).value == -1.0
    sym = np.array([[1, 0], [-1, 0], [0, 1], [0, -1], [2, 0], [-2, 0], [0, 2], [0, -2.0]])
    assert gk_corr(sym).value == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(DegeneracyError):
        gk_corr(np.column_stack([np.ones(10), np.arange(10.0)]))


# --------------------------------------------------------------- registry

def test_registry():
    assert len(ESTIMATOR_IDS) == 13
    assert resolve_ids("all") == list(ESTIMATOR_IDS)
    assert resolve_ids("pearson, kendall,pearson") == ["pearson", "kendall"]
    assert "tyler" not in resolve_ids("closed_form")
    with pytest.raises(ConfigError):
        resolve_ids(["pearson", "nope"])
    with pytest.raises(ConfigError):
        get_estimator("nope")


def test_estimate_many_records_failures():
    x = np.column_stack([np.arange(10.0), np.ones(10)])
    out = estimate_many(x, ["pearson", "spatial_sign"])
    assert all(isinstance(v, Exception) for v in out.values())
    with pytest.raises(DegeneracyError):
        estimate_many(x, ["pearson"], errors="raise")


def test_estimate_many_matches_single_calls(normal_sample):
    x = normal_sample(n=60, seed=8)
    out = estimate_many(x, "all", seed=SeedSpec(3))
    assert list(out) == list(ESTIMATOR_IDS)
    for e in ("pearson", "kendall", "tyler"):
        assert out[e].value == estimate(x, e).value
    assert out["s"].value == estimate(x, "s", seed=SeedSpec(3).child("est", "s")).value
    assert out["rmcd"].estimator_id == "rmcd" and out["wmcd"].estimator_id == "wmcd"


# ---------------------------------------------------- cross-estimator laws

@pytest.mark.parametrize("ident", ESTIMATOR_IDS)
@pytest.mark.parametrize("seed", [0, 1])
def test_affine_margin_invariance(ident, seed):
    x = sample_normal2(sigma_from_rho(0.4), 40, SeedSpec(100 + seed))
    base = estimate(x, ident, seed=SeedSpec(seed))
    assert -1.0 <= base.value <= 1.0
    # spatial sign, and Tyler about the spatial median, are only orthogonally
    # equivariant: a common scale and shift is allowed
    scales = (2.5, 2.5) if ident in ("spatial_sign", "tyler") else (2.5, 0.3)
    moved = x * np.array(scales) + np.array([10.0, -3.0])
    assert estimate(moved, ident, seed=SeedSpec(seed)).value == pytest.approx(base.value, abs=1e-8)
    flipped = x * np.array([1.0, -1.0])
    assert estimate(flipped, ident, seed=SeedSpec(seed)).value == pytest.approx(-base.value, abs=1e-8)


@pytest.mark.parametrize("ident", ["quadrant", "kendall", "spearman", "gaussian_rank"])
def test_rank_estimators_monotone_invariance(ident):
    x = sample_normal2(sigma_from_rho(-0.3), 50, SeedSpec(11))
    y = np.column_stack([np.exp(x[:, 0]), x[:, 1] ** 3])
    assert estimate(y, ident).value == pytest.approx(estimate(x, ident).value, abs=1e-14)


@pytest.mark.parametrize("ident", ["pearson", "spatial_sign", "kendall", "spearman", "gaussian_rank",
                                   "gk_qn", "gk_tau", "tyler"])
def test_large_sample_consistency(ident):
    x = sample_normal2(sigma_from_rho(0.5), 100_000, SeedSpec(12))
    assert estimate(x, ident).value == pytest.approx(0.5, abs=0.01)
