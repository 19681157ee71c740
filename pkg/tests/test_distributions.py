import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from signcorr.asymptotics import population_sscm
from signcorr.distributions import (
    EllipticalSpec,
    SeedSpec,
    as_generator,
    contaminate_replace,
    contaminate_shift,
    powerexp_radial_moment,
    sample_normal2,
    sample_powerexp2,
    sample_skewed_exp,
    sample_t2,
    sigma_from_rho,
    skewed_exp_alpha,
    stream_ids,
    transform,
    uniforms,
)
from signcorr.errors import DomainError
from signcorr.numerics import SymMat2
from signcorr.simulation import derive_seed
from signcorr.sscm import sscm

SIG = sigma_from_rho(0.5, 1.0, 2.0)


def mahal2(x, sigma):
    return np.einsum("ij,jk,ik->i", x, np.linalg.inv(sigma.to_array()), x)


def test_sigma_from_rho():
    assert sigma_from_rho(0.5) == SymMat2(1.0, 0.5, 1.0)
    assert sigma_from_rho(-0.5, 4, 4) == SymMat2(4.0, -2.0, 4.0)
    assert sigma_from_rho(0.0, 2, 3) == SymMat2(2.0, 0.0, 3.0)
    with pytest.raises(DomainError):
        sigma_from_rho(1.0)
    with pytest.raises(DomainError):
        sigma_from_rho(0.1, 0.0, 1.0)


# ------------------------------------------------------------------- seeds

def test_seedspec_paths():
    s = SeedSpec(7)
    assert s.child("a", 1) == SeedSpec(7, ("a", 1))
    assert s.child("a", 1).stream_id == SeedSpec(7, ("a", 1)).stream_id
    assert s.child("a", 1).stream_id != s.child("a", 2).stream_id
    assert s.child(1).stream_id != s.child("1").stream_id
    assert SeedSpec(8).stream_id != s.stream_id
    assert s.to_json() == {"master": 7, "path": []}
    with pytest.raises(DomainError):
        SeedSpec(-1)
    with pytest.raises(DomainError):
        s.child(True)
    with pytest.raises(DomainError):
        s.child(1.5)


def test_as_generator():
    g = np.random.default_rng(0)
    assert as_generator(g) is g
    assert as_generator(3).random() == SeedSpec(3).generator().random()
    assert as_generator(None).random() == SeedSpec(0).generator().random()
    with pytest.raises(DomainError):
        as_generator("seed")


def test_stream_ids_vectorised_matches_scalar():
    prefix = SeedSpec(11).child("TnuMSE")
    g = np.array([0, 3, 7, 2**40])
    r = np.array([0, 1, 99_999, 5])
    ids = stream_ids(prefix, g, r)
    for gi, ri, sid in zip(g, r, ids):
        assert derive_seed(11, "TnuMSE", int(gi), int(ri)).stream_id == int(sid)


def test_derive_seed_unique_over_1e7():
    prefix = SeedSpec(20240101).child("TnuMSE")
    g, r = np.divmod(np.arange(10_000_000, dtype=np.uint64), np.uint64(100_000))
    ids = stream_ids(prefix, g, r)
    assert np.unique(ids).size == ids.size


def test_derive_seed_basic():
    assert derive_seed(1, "X", 0, 0) == derive_seed(SeedSpec(1), "X", 0, 0)
    assert derive_seed(1, "X", 0, 0).stream_id != derive_seed(1, "X", 0, 1).stream_id


# ---------------------------------------------------------------- samplers

@pytest.mark.parametrize("make", [
    lambda s: sample_normal2(SIG, 50, s),
    lambda s: sample_t2(SIG, 3.0, 50, s),
    lambda s: sample_powerexp2(SIG, 0.4, 50, s),
    lambda s: sample_skewed_exp(0.3, 50, s),
])
def test_samplers_deterministic(make):
    a = make(SeedSpec(5, ("x",)))
    b = make(SeedSpec(5, ("x",)))
    c = make(SeedSpec(5, ("y",)))
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, c)
    assert a.shape == (50, 2)


def test_stacked_transform_matches_per_sample():
    seeds = [SeedSpec(3, (i,)) for i in range(8)]
    for kind, kw in [("normal", dict(sigma=SIG)), ("t", dict(sigma=SIG, param=1.0)),
                     ("powerexp", dict(sigma=SIG, param=0.2)), ("skewed", dict(rho=0.4))]:
        u = np.stack([uniforms(s, 30, kind) for s in seeds])
        xs = transform(u, kind, **kw)
        for s, x in zip(seeds, xs):
            assert transform(uniforms(s, 30, kind), kind, **kw).tobytes() == x.tobytes()


def test_transform_unknown():
    with pytest.raises(DomainError):
        transform(np.full((3, 2), 0.5), "cauchy")


def test_normal_moments():
    n = 100_000
    x = sample_normal2(SIG, n, SeedSpec(1))
    c = np.cov(x.T)
    s = SIG.to_array()
    # var(s_ij hat) = (s_ii s_jj + s_ij^2) / n
    se = np.sqrt((np.outer(np.diag(s), np.diag(s)) + s ** 2) / n)
    assert np.all(np.abs(c - s) <= 3 * se)
    z = sample_normal2(sigma_from_rho(0.0), n, SeedSpec(2))
    assert abs(np.corrcoef(z.T)[0, 1]) <= 3 / math.sqrt(n)


def test_radial_law_normal():
    d2 = mahal2(sample_normal2(SIG, 100_000, SeedSpec(3)), SIG)
    assert stats.kstest(d2, stats.chi2(2).cdf).statistic <= 0.01


@pytest.mark.parametrize("nu", [1.0, 2.0, 5.0, 10.0])
def test_radial_law_t(nu):
    d2 = mahal2(sample_t2(SIG, nu, 100_000, SeedSpec(4)), SIG)
    assert stats.kstest(d2 / 2.0, stats.f(2, nu).cdf).statistic <= 0.01


@pytest.mark.parametrize("alpha", [0.1, 0.5, 1.0, 2.0])
def test_radial_law_powerexp(alpha):
    d2 = mahal2(sample_powerexp2(SIG, alpha, 100_000, SeedSpec(5)), SIG)
    g = stats.gamma(1.0 / alpha, scale=2.0)
    assert stats.kstest(d2 ** alpha, g.cdf).statistic <= 0.01
    if alpha == 1.0:
        assert stats.kstest(d2, stats.chi2(2).cdf).statistic <= 0.01


def test_powerexp_radial_moments():
    assert powerexp_radial_moment(1.0, 2) == pytest.approx(2.0)  # E chi2_2
    assert powerexp_radial_moment(0.5, 2) == pytest.approx(24.0)
    x = sample_powerexp2(sigma_from_rho(0.0), 0.7, 400_000, SeedSpec(6))
    r2 = (x ** 2).sum(axis=1)
    assert r2.mean() == pytest.approx(powerexp_radial_moment(0.7, 2), rel=0.01)


def test_laplace_margin_kurtosis():
    # margins of an elliptical law in two dimensions: excess kurtosis
    # 3 * 2 * E R^4 / (4 (E R^2)^2) - 3, which is 2 at alpha = 0.5
    m2, m4 = powerexp_radial_moment(0.5, 2), powerexp_radial_moment(0.5, 4)
    kappa = 1.5 * m4 / m2 ** 2 - 3.0
    assert kappa == pytest.approx(2.0, abs=1e-12)
    x = sample_powerexp2(sigma_from_rho(0.0), 0.5, 2_000_000, SeedSpec(7))
    assert stats.kurtosis(x[:, 0]) == pytest.approx(kappa, abs=0.1)


def test_t_large_nu_is_normal():
    a = sample_t2(SIG, 1e6, 100_000, SeedSpec(8))
    np.testing.assert_allclose(np.cov(a.T), SIG.to_array(), atol=0.02)
    d2 = mahal2(a, SIG)
    assert stats.kstest(d2, stats.chi2(2).cdf).statistic <= 0.01


def test_sign_distribution_free_of_generator():
    sig = sigma_from_rho(0.6, 1.0, 3.0)
    ref = population_sscm(sig.to_array())
    specs = [EllipticalSpec(sig), EllipticalSpec(sig, "t", 1.0), EllipticalSpec(sig, "t", 5.0),
             EllipticalSpec(sig, "powerexp", 0.5)]
    for i, spec in enumerate(specs):
        s = sscm(spec.sample(1_000_000, SeedSpec(9, (i,))), center=[0.0, 0.0])
        assert np.abs(s - ref).max() <= 0.005


def test_elliptical_spec_validation():
    with pytest.raises(DomainError):
        EllipticalSpec(SIG, "cauchy")
    with pytest.raises(DomainError):
        EllipticalSpec(SIG, "t")
    with pytest.raises(DomainError):
        EllipticalSpec(SymMat2(1.0, 2.0, 1.0))
    with pytest.raises(DomainError):
        sample_t2(SIG, 0.0, 5, SeedSpec(0))
    with pytest.raises(DomainError):
        sample_powerexp2(SIG, -1.0, 5, SeedSpec(0))


def test_skewed_exp():
    assert skewed_exp_alpha(0.6) == pytest.approx(1 / 3, abs=1e-15)
    a = skewed_exp_alpha(0.6)
    assert 2 * a / (1 + a * a) == pytest.approx(0.6, abs=1e-15)
    assert skewed_exp_alpha(0.0) == 0.0
    with pytest.raises(DomainError):
        skewed_exp_alpha(1.0)
    with pytest.raises(DomainError):
        skewed_exp_alpha(-0.1)
    x = sample_skewed_exp(0.6, 100_000, SeedSpec(10))
    assert np.corrcoef(x.T)[0, 1] == pytest.approx(0.6, abs=0.01)
    assert np.all(x > 0)


@given(st.floats(0.0, 0.99))
def test_skewed_alpha_inverts(rho):
    a = skewed_exp_alpha(rho)
    assert 0.0 <= a < 1.0
    assert 2 * a / (1 + a * a) == pytest.approx(rho, abs=1e-12)


# ----------------------------------------------------------- contamination

def test_contaminate_shift():
    x = np.array([[0.0, 0.0], [1.0, 1.0]])
    np.testing.assert_array_equal(contaminate_shift(x, 0.0), x)
    np.testing.assert_array_equal(contaminate_shift(x, 5.0), [[5.0, 0.0], [1.0, 1.0]])
    assert x[0, 0] == 0.0


def test_contaminate_replace_nesting():
    x = sample_normal2(sigma_from_rho(0.5), 20, SeedSpec(11))
    cs = sigma_from_rho(-0.5, 4, 4)
    seed = SeedSpec(12)
    np.testing.assert_array_equal(contaminate_replace(x, 0, cs, seed), x)
    full = contaminate_replace(x, 20, cs, seed)
    np.testing.assert_array_equal(full, sample_normal2(cs, 20, seed))
    for m in range(20):
        a = contaminate_replace(x, m, cs, seed)
        b = contaminate_replace(x, m + 1, cs, seed)
        diff = np.any(a != b, axis=1)
        assert diff.sum() == 1 and diff[m]
        np.testing.assert_array_equal(b[m + 1:], x[m + 1:])
    with pytest.raises(DomainError):
        contaminate_replace(x, 21, cs, seed)
