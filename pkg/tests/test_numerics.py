import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special, stats

from signcorr.errors import DomainError
from signcorr.numerics import (
    SymMat2,
    chi2_quantile,
    eig_sym2,
    kron2,
    stable_sum,
    std_normal_cdf,
    std_normal_quantile,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_eig_sym2_examples():
    e = eig_sym2(np.array([[1.0, 0.6], [0.6, 1.0]]))
    assert e.lambda1 == pytest.approx(1.6, abs=1e-15)
    assert e.lambda2 == pytest.approx(0.4, abs=1e-15)
    np.testing.assert_allclose(e.u[:, 0], np.array([1.0, 1.0]) / math.sqrt(2), atol=1e-15)

    e = eig_sym2(np.eye(2))
    assert (e.lambda1, e.lambda2) == (1.0, 1.0)
    np.testing.assert_array_equal(e.u, np.eye(2))

    e = eig_sym2(SymMat2(2 / 3, 0.0, 1 / 3))
    assert (e.lambda1, e.lambda2) == (2 / 3, 1 / 3)
    np.testing.assert_array_equal(e.u, np.eye(2))


def test_eig_sym2_swapped_diagonal():
    e = eig_sym2(np.diag([1.0, 3.0]))
    assert e.lambda1 == 3.0
    np.testing.assert_array_equal(e.u[:, 0], [0.0, 1.0])


def test_eig_sym2_rejects_nonfinite():
    with pytest.raises(DomainError):
        eig_sym2(np.array([[np.nan, 0.0], [0.0, 1.0]]))


def test_eig_sym2_reconstruction_random(rng):
    worst = 0.0
    for _ in range(10_000):
        m = rng.normal(size=3) * 10.0 ** rng.uniform(-3, 3)
        mat = np.array([[m[0], m[1]], [m[1], m[2]]])
        e = eig_sym2(mat)
        rec = e.u @ np.diag([e.lambda1, e.lambda2]) @ e.u.T
        scale = max(1.0, np.abs(mat).max())
        worst = max(worst, np.abs(rec - mat).max() / scale)
        assert e.lambda1 >= e.lambda2
        assert abs(abs(np.linalg.det(e.u)) - 1.0) <= 1e-12
        np.testing.assert_allclose(e.u.T @ e.u, np.eye(2), atol=1e-12)
    assert worst <= 1e-12


@given(finite, finite, finite)
def test_eig_sign_convention(a, b, c):
    e = eig_sym2(SymMat2(a, b, c))
    for j in range(2):
        col = e.u[:, j]
        first = col[0] if col[0] != 0.0 else col[1]
        assert first > 0.0


def test_kron2_examples():
    np.testing.assert_array_equal(kron2(np.eye(2), np.eye(2)), np.eye(4))
    np.testing.assert_array_equal(kron2(np.diag([2.0, 3.0]), np.eye(2)), np.diag([2.0, 2, 3, 3]))
    k = kron2(np.array([[0.0, 1.0], [1.0, 0.0]]), np.eye(2))
    expected = np.zeros((4, 4))
    expected[:2, 2:] = np.eye(2)
    expected[2:, :2] = np.eye(2)
    np.testing.assert_array_equal(k, expected)


def test_kron2_mixed_product(rng):
    for _ in range(200):
        a, b, c, d = rng.normal(size=(4, 2, 2))
        np.testing.assert_allclose(kron2(a, b) @ kron2(c, d), kron2(a @ c, b @ d), atol=1e-12)


def test_kron2_bad_shape():
    with pytest.raises(DomainError):
        kron2(np.eye(3), np.eye(2))


def test_normal_quantile_values():
    assert std_normal_quantile(0.5) == 0.0
    assert std_normal_quantile(0.975) == pytest.approx(1.959963984540054, abs=1e-13)
    assert std_normal_quantile(5 / 8) == pytest.approx(0.31863936396437514, abs=1e-13)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5, float("nan")])
def test_normal_quantile_domain(p):
    with pytest.raises(DomainError):
        std_normal_quantile(p)


def test_normal_quantile_against_scipy():
    p = np.concatenate([np.geomspace(1e-300, 0.5, 2000), 1.0 - np.geomspace(1e-16, 0.5, 2000)])
    x = std_normal_quantile(p)
    ref = special.ndtri(p)
    assert np.max(np.abs(x - ref) / np.maximum(1.0, np.abs(ref))) <= 1e-14


@given(st.floats(1e-12, 1 - 1e-12))
def test_quantile_cdf_round_trip(p):
    assert abs(std_normal_cdf(std_normal_quantile(p)) - p) <= 1e-12


@given(st.floats(-8.0, 4.0))  # above 4 the cdf itself rounds away the tail
def test_cdf_quantile_round_trip(x):
    p = std_normal_cdf(x)
    if 0.0 < p < 1.0:
        assert std_normal_quantile(p) == pytest.approx(x, abs=1e-10)


def test_chi2_quantile_examples():
    assert chi2_quantile(0.95, 2) == pytest.approx(5.991464547107979, abs=1e-12)
    assert chi2_quantile(0.5, 2) == pytest.approx(1.3862943611198906, abs=1e-12)
    assert chi2_quantile(0.975, 2) == pytest.approx(7.377758908227871, abs=1e-12)


@pytest.mark.parametrize("df", [1, 3, 4, 7])
def test_chi2_quantile_other_df(df):
    for p in (0.01, 0.5, 0.975):
        assert chi2_quantile(p, df) == pytest.approx(stats.chi2.ppf(p, df), rel=1e-10)


@pytest.mark.parametrize("p,df", [(0.0, 2), (1.0, 2), (0.5, 0), (0.5, 1.5)])
def test_chi2_quantile_domain(p, df):
    with pytest.raises(DomainError):
        chi2_quantile(p, df)


def test_stable_sum():
    assert stable_sum([1, 2, 3]) == 6
    assert stable_sum([1e16, 1.0, -1e16]) == 1.0
    assert stable_sum([]) == 0.0


@given(st.lists(st.floats(-1e10, 1e10), max_size=50))
def test_stable_sum_order_of_magnitude(values):
    assert stable_sum(values) == math.fsum(values)


def test_symmat_rejects_nonfinite():
    with pytest.raises(DomainError):
        SymMat2(1.0, float("inf"), 1.0)
