import math

import numpy as np
import pytest
from scipy import optimize

from signcorr.distributions import SeedSpec, sample_normal2, sigma_from_rho
from signcorr.errors import DegeneracyError, DomainError
from signcorr.estimators.affine import (
    _expected_rho_quad,
    _pair_directions,
    _direction_pairs,
    _sd_outlyingness,
    _sd_outlyingness_select,
    biweight_rho,
    concentrate,
    corr_from_cov,
    mcd,
    mcd_both,
    mcd_consistency,
    mcd_reweight_consistency,
    s_constants,
    s_estimator,
    stahel_donoho,
    tyler_residual,
    tyler_shape,
)
from signcorr.numerics import SymMat2


def draw(rho, n, seed, var=(1.0, 1.0)):
    return sample_normal2(sigma_from_rho(rho, *var), n, SeedSpec(seed))


def test_corr_from_cov_examples():
    assert corr_from_cov(np.array([[4.0, -2.0], [-2.0, 4.0]])) == -0.5
    assert corr_from_cov(np.diag([3.0, 7.0])) == 0.0
    assert corr_from_cov(SymMat2(1.0, 0.6, 1.0)) == 0.6
    with pytest.raises(DomainError):
        corr_from_cov(np.array([[0.0, 0.0], [0.0, 1.0]]))


# ------------------------------------------------------------------ Tyler

def test_tyler_cross_is_identity():
    cross = np.array([[1, 0], [-1, 0], [0, 1], [0, -1.0]])
    sc, est = tyler_shape(cross, center=[0, 0])
    np.testing.assert_allclose(sc.cov.to_array(), np.eye(2), atol=1e-12)
    assert est.value == 0.0


def test_tyler_scale_invariance_and_residual():
    x = draw(0.6, 200, 1)
    sc, est = tyler_shape(x)
    _, est3 = tyler_shape(3.0 * x)
    assert est3.value == pytest.approx(est.value, abs=1e-10)
    assert sc.cov.trace == pytest.approx(2.0, abs=1e-12)
    assert tyler_residual(x, sc.location, sc.cov) <= 1e-8


def test_tyler_drops_center_points():
    x = np.vstack([draw(0.3, 30, 2), np.zeros((3, 2))])
    sc, est = tyler_shape(x, center=[0.0, 0.0])
    assert est.n_used == 30
    assert sc.diagnostics["n_dropped"] == 3


def test_tyler_degenerate_line():
    t = np.linspace(-1, 1, 11)
    with pytest.raises(DegeneracyError):
        tyler_shape(np.column_stack([t, 2 * t]), center=[0.0, 0.0])


def test_tyler_large_sample():
    assert tyler_shape(draw(0.5, 100_000, 3))[1].value == pytest.approx(0.5, abs=0.01)


# -------------------------------------------------------------------- MCD

def test_mcd_alpha_zero_is_sample_covariance():
    x = draw(0.4, 50, 4)
    sc, est = mcd(x, alpha=0.0, reweight=False)
    np.testing.assert_allclose(sc.location, x.mean(axis=0), atol=1e-14)
    np.testing.assert_allclose(sc.cov.to_array(), np.cov(x.T), atol=1e-14)
    assert est.value == pytest.approx(np.corrcoef(x.T)[0, 1], abs=1e-14)
    assert mcd_consistency(0.0) == 1.0


def test_mcd_consistency_factors():
    # (1 - a) / F_{chi2_4}(q), q the (1 - a) quantile of chi2_2
    q = -2 * math.log(0.5)
    f4 = 1 - math.exp(-q / 2) * (1 + q / 2)
    assert mcd_consistency(0.5) == pytest.approx(0.5 / f4, rel=1e-13)
    q = -2 * math.log(0.025)
    f4 = 1 - math.exp(-q / 2) * (1 + q / 2)
    assert mcd_reweight_consistency() == pytest.approx(0.975 / f4, rel=1e-13)


def test_cstep_monotone():
    rng = np.random.default_rng(5)
    for seed in range(30):
        x = draw(0.7, 80, 100 + seed)
        x[:10] += 6.0
        start = rng.choice(80, size=41, replace=False)
        dets = concentrate(x, start, h=41, steps=50)
        assert all(b <= a * (1 + 1e-12) for a, b in zip(dets, dets[1:]))


def test_cstep_monotone_after_inflation():
    # from a 3-subset the first step inflates to h points; every later step is a C-step
    x = draw(0.2, 90, 50)
    dets = concentrate(x, [0, 1, 2], h=46, steps=50)
    assert len(dets) > 2
    assert all(b <= a * (1 + 1e-12) for a, b in zip(dets[1:], dets[2:]))


def test_mcd_ignores_contamination():
    x = draw(0.5, 200, 6)
    x[:40] = np.random.default_rng(1).normal(loc=[8, -8], size=(40, 2))
    _, est = mcd(x, seed=SeedSpec(0))
    assert est.value == pytest.approx(0.5, abs=0.15)
    assert abs(est.value - np.corrcoef(x.T)[0, 1]) > 0.3


def test_mcd_both_matches_separate_calls():
    x = draw(0.3, 60, 7)
    raw, wtd = mcd_both(x, seed=SeedSpec(9))
    assert raw.value == mcd(x, reweight=False, seed=SeedSpec(9))[1].value
    assert wtd.value == mcd(x, seed=SeedSpec(9))[1].value


def test_mcd_domain():
    with pytest.raises(DomainError):
        mcd(draw(0.0, 5, 1))
    with pytest.raises(DomainError):
        mcd(draw(0.0, 50, 1), alpha=1.0)


def test_mcd_large_sample():
    assert mcd(draw(0.5, 100_000, 8), seed=SeedSpec(1))[1].value == pytest.approx(0.5, abs=0.02)


def test_mcd_deterministic():
    x = draw(0.2, 70, 9)
    assert mcd(x, seed=SeedSpec(4))[1].value == mcd(x, seed=SeedSpec(4))[1].value


# ---------------------------------------------------------- Stahel-Donoho

def test_sd_sweep_equals_direct_evaluation():
    for seed in range(10):
        x = draw(0.5, 60, 200 + seed)
        x[:5] *= 5.0
        dirs = _pair_directions(x, _direction_pairs(60, 10_000, None))
        r1, v1 = _sd_outlyingness(x, dirs)
        r2, v2 = _sd_outlyingness_select(x, dirs)
        assert v1 == v2
        np.testing.assert_array_equal(r1, r2)


def test_sd_symmetric_data_mean_zero():
    half = draw(0.4, 30, 10)
    x = np.vstack([half, -half])
    sc, _ = stahel_donoho(x)
    np.testing.assert_allclose(sc.location, 0.0, atol=1e-12)


def test_sd_single_outlier():
    x = draw(0.5, 100, 11)
    y = x.copy()
    y[0] = [50.0, -50.0]
    sc, est = stahel_donoho(y)
    assert abs(est.value - stahel_donoho(x)[1].value) <= 0.05
    assert sc.diagnostics["min_weight"] < 0.01


def test_sd_random_directions_for_large_n():
    x = draw(0.5, 300, 12)
    sc, est = stahel_donoho(x, n_dirs=2000, seed=SeedSpec(3))
    assert sc.diagnostics["n_directions"] <= 2000
    assert est.value == stahel_donoho(x, n_dirs=2000, seed=SeedSpec(3))[1].value


def test_sd_large_sample():
    assert stahel_donoho(draw(0.5, 10_000, 13), seed=SeedSpec(2))[1].value == pytest.approx(0.5, abs=0.02)


def test_sd_degenerate():
    x = np.zeros((10, 2))
    x[0] = [1.0, 1.0]
    with pytest.raises(DegeneracyError):
        stahel_donoho(x)


# ------------------------------------------------------------ S-estimator

def test_s_constant_against_quadrature_root():
    c, b = s_constants(0.5)
    c_ref = optimize.brentq(lambda t: t * t / 12.0 - _expected_rho_quad(t), 1.0, 5.0, xtol=1e-14)
    assert c == pytest.approx(c_ref, abs=1e-8)
    assert c == pytest.approx(2.6608033929, abs=1e-8)
    assert b == pytest.approx(c * c / 12.0, abs=1e-14)
    assert b == pytest.approx(_expected_rho_quad(c), abs=1e-12)


def test_s_constants_domain():
    with pytest.raises(DomainError):
        s_constants(0.6)


def test_biweight_rho_shape():
    c = 2.0
    y = np.linspace(-3, 3, 61)
    r = biweight_rho(y, c)
    assert r[30] == 0.0
    assert np.all(r[np.abs(y) >= c] == c * c / 6)
    assert np.all(np.diff(r[30:]) >= 0)


@pytest.mark.parametrize("seed", range(5))
def test_s_feasibility(seed):
    x = draw(0.5, 100, 300 + seed)
    sc, est = s_estimator(x, seed=SeedSpec(seed))
    assert abs(sc.diagnostics["constraint_gap"]) <= 1e-8
    assert -1.0 <= est.value <= 1.0


def test_s_resists_contamination():
    x = draw(0.5, 200, 14)
    x[:40] = np.random.default_rng(2).normal(loc=[6, -6], size=(40, 2))
    assert s_estimator(x, seed=SeedSpec(1))[1].value == pytest.approx(0.5, abs=0.15)


def test_s_large_sample():
    assert s_estimator(draw(0.5, 10_000, 15), seed=SeedSpec(3))[1].value == pytest.approx(0.5, abs=0.02)
