"""Univariate robust scale estimators: MAD, Qn and the tau-scale."""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .._validate import as_vector
from ..errors import DegeneracyError, DomainError
from ..numerics import std_normal_quantile
from ..types import ScaleEstimate

__all__ = ["MAD_CONSTANT", "QN_CONSTANT", "mad", "qn", "qn_order_stat", "tau_scale",
           "tau_location"]

MAD_CONSTANT = 1.482602218505602  # 1 / Phi^{-1}(3/4)
QN_CONSTANT = 1.0 / (math.sqrt(2.0) * std_normal_quantile(5.0 / 8.0))

TAU_C1 = 4.5
TAU_C2 = 3.0


def mad(x, scaled: bool = False) -> ScaleEstimate:
    """Median absolute deviation from the median.

    A zero value (more than half the sample tied) is returned as is; check
    ``ScaleEstimate.degenerate``.
    """
    v = as_vector(x)
    med = np.median(v)
    m = float(np.median(np.abs(v - med)))
    return ScaleEstimate(m * MAD_CONSTANT if scaled else m, "MAD")


@njit(cache=True, nogil=True)
def _count_le(xs, t):
    # pairs i < j of sorted xs with xs[j] - xs[i] <= t
    n = xs.shape[0]
    cnt = 0
    j = 0
    for i in range(n):
        if j < i + 1:
            j = i + 1
        while j < n and xs[j] - xs[i] <= t:
            j += 1
        cnt += j - i - 1
    return cnt


@njit(cache=True, nogil=True)
def _kth_pair_gap(xs, k):
    """k-th smallest (1-based) of the pairwise gaps of the sorted array xs.

    Bisection over the bit patterns of non-negative doubles, so the result
    is exactly one of the computed gaps.
    """
    n = xs.shape[0]
    lo = np.int64(0)
    top = np.empty(1)
    top[0] = xs[n - 1] - xs[0]
    hi = top.view(np.int64)[0]
    probe = np.empty(1)
    while lo < hi:
        mid = lo + (hi - lo) // 2
        probe.view(np.int64)[0] = mid
        if _count_le(xs, probe[0]) >= k:
            hi = mid
        else:
            lo = mid + 1
    probe.view(np.int64)[0] = lo
    return probe[0]


def qn_order_stat(x) -> float:
    """The unscaled Qn order statistic {|x_i - x_j|, i < j}_(k), k = C(floor(n/2)+1, 2)."""
    v = as_vector(x, min_n=2)
    n = v.size
    h = n // 2 + 1
    k = h * (h - 1) // 2
    xs = np.sort(v)
    return float(_kth_pair_gap(xs, k))


def qn(x) -> ScaleEstimate:
    """Rousseeuw-Croux Qn scale, normal-consistent (no small-sample correction)."""
    return ScaleEstimate(QN_CONSTANT * qn_order_stat(x), "Qn")


def tau_location(x, sigma0: float, c1: float = TAU_C1) -> float:
    v = as_vector(x)
    med = np.median(v)
    z = (v - med) / sigma0
    w = np.where(np.abs(z) <= c1, (1.0 - (z / c1) ** 2) ** 2, 0.0)
    return float(np.sum(w * v) / np.sum(w))


def tau_scale(x, c1: float = TAU_C1, c2: float = TAU_C2) -> ScaleEstimate:
    """tau-scale with initial scale sigma0 = normalised MAD.

    No normal-consistency constant is applied; under N(0, 1) the population
    value is sqrt(E min(Z^2, c2^2)) ~= 0.9975 for c2 = 3.
    """
    v = as_vector(x, min_n=2)
    sigma0 = mad(v, scaled=True).value
    if sigma0 <= 0.0:
        raise DegeneracyError("MAD is zero; tau-scale undefined")
    mu = tau_location(v, sigma0, c1)
    z = (v - mu) / sigma0
    tau2 = sigma0 * sigma0 * float(np.mean(np.minimum(z * z, c2 * c2)))
    return ScaleEstimate(math.sqrt(tau2), "TauScale")


def scale_by_name(x, name: str) -> ScaleEstimate:
    name = name.lower()
    if name == "qn":
        return qn(x)
    if name in ("tau", "tauscale", "tau_scale"):
        return tau_scale(x)
    if name == "mad":
        return mad(x, scaled=True)
    raise DomainError(f"unknown scale estimator {name!r}")
