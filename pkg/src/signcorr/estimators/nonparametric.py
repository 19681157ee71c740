"""Moment, rank and sign based correlation estimators."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from numba import njit
from scipy.stats import rankdata

from .._validate import as_data
from ..errors import DegeneracyError
from ..numerics import std_normal_quantile
from ..types import CorrEstimate

__all__ = ["pearson", "gaussian_rank_corr", "spearman_corr", "kendall_corr",
           "kendall_tau_a", "quadrant_corr"]


def _clip(r: float) -> float:
    return min(1.0, max(-1.0, r))


def _check_margins(x):
    if np.all(x[:, 0] == x[0, 0]) or np.all(x[:, 1] == x[0, 1]):
        raise DegeneracyError("constant margin")


def pearson(data) -> CorrEstimate:
    x = as_data(data, p=2)
    xc = x - x.mean(axis=0)
    sxx = float(xc[:, 0] @ xc[:, 0])
    syy = float(xc[:, 1] @ xc[:, 1])
    if sxx == 0.0 or syy == 0.0:
        raise DegeneracyError("constant margin")
    r = float(xc[:, 0] @ xc[:, 1]) / math.sqrt(sxx * syy)
    return CorrEstimate("pearson", _clip(r), n_used=x.shape[0])


@lru_cache(maxsize=256)
def _normal_scores_norm(n: int) -> float:
    q = std_normal_quantile(np.arange(1, n + 1) / (n + 1.0))
    return float(q @ q)


def gaussian_rank_corr(data) -> CorrEstimate:
    """Normal-scores rank correlation (midranks for ties)."""
    x = as_data(data, p=2)
    _check_margins(x)
    n = x.shape[0]
    sx = std_normal_quantile(rankdata(x[:, 0]) / (n + 1.0))
    sy = std_normal_quantile(rankdata(x[:, 1]) / (n + 1.0))
    r = float(sx @ sy) / _normal_scores_norm(n)
    return CorrEstimate("gaussian_rank", _clip(r), n_used=n)


def spearman_corr(data, consistent: bool = True) -> CorrEstimate:
    x = as_data(data, p=2)
    _check_margins(x)
    rx = rankdata(x[:, 0])
    ry = rankdata(x[:, 1])
    rx -= rx.mean()
    ry -= ry.mean()
    raw = _clip(float(rx @ ry) / math.sqrt(float(rx @ rx) * float(ry @ ry)))
    value = 2.0 * math.sin(math.pi * raw / 6.0) if consistent else raw
    if abs(raw) == 1.0:
        value = raw  # 2 sin(pi / 6) rounds to 1 - ulp
    return CorrEstimate("spearman", _clip(value), n_used=x.shape[0], diagnostics={"raw": raw})


@njit(cache=True, nogil=True)
def _tie_pairs(v):
    # sum of t(t-1)/2 over runs of equal values in a sorted array
    n = v.shape[0]
    total = 0
    run = 1
    for i in range(1, n):
        if v[i] == v[i - 1]:
            run += 1
        else:
            total += run * (run - 1) // 2
            run = 1
    total += run * (run - 1) // 2
    return total


@njit(cache=True, nogil=True)
def _merge_count(a):
    """Sort ``a`` in place (bottom-up merge sort) and return its inversion count."""
    n = a.shape[0]
    buf = np.empty_like(a)
    swaps = 0
    width = 1
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                if a[j] < a[i]:
                    buf[k] = a[j]
                    swaps += mid - i
                    j += 1
                else:
                    buf[k] = a[i]
                    i += 1
                k += 1
            while i < mid:
                buf[k] = a[i]
                i += 1
                k += 1
            while j < hi:
                buf[k] = a[j]
                j += 1
                k += 1
        a[:] = buf[:]
        width *= 2
    return swaps


@njit(cache=True, nogil=True)
def _kendall_knight(xs, ys):
    # xs, ys sorted lexicographically by (x, y)
    n = xs.shape[0]
    n0 = n * (n - 1) // 2
    n1 = _tie_pairs(xs)
    n3 = 0
    run = 1
    for i in range(1, n):
        if xs[i] == xs[i - 1] and ys[i] == ys[i - 1]:
            run += 1
        else:
            n3 += run * (run - 1) // 2
            run = 1
    n3 += run * (run - 1) // 2
    y = ys.copy()
    swaps = _merge_count(y)
    n2 = _tie_pairs(y)
    return n0 - n1 - n2 + n3 - 2 * swaps


@njit(cache=True, nogil=True)
def _kendall_brute(x, y):
    n = x.shape[0]
    s = 0
    for i in range(n):
        for j in range(i):
            dx = x[i] - x[j]
            dy = y[i] - y[j]
            if dx == 0.0 or dy == 0.0:
                continue
            s += 1 if (dx > 0.0) == (dy > 0.0) else -1
    return s


def kendall_tau_a(x, y, method: str = "auto") -> float:
    """Kendall's tau-a: tied pairs count as zero-sign pairs."""
    x = np.ascontiguousarray(x, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    n = x.size
    if method == "brute" or (method == "auto" and n <= 64):
        s = _kendall_brute(x, y)
    else:
        order = np.lexsort((y, x))
        s = _kendall_knight(x[order], y[order])
    return 2.0 * s / (n * (n - 1))


def kendall_corr(data, consistent: bool = True) -> CorrEstimate:
    x = as_data(data, p=2)
    _check_margins(x)
    raw = kendall_tau_a(x[:, 0], x[:, 1])
    value = math.sin(0.5 * math.pi * raw) if consistent else raw
    return CorrEstimate("kendall", _clip(value), n_used=x.shape[0], diagnostics={"raw": raw})


def quadrant_corr(data, consistent: bool = True) -> CorrEstimate:
    x = as_data(data, p=2)
    med = np.median(x, axis=0)
    raw = float(np.mean(np.sign(x[:, 0] - med[0]) * np.sign(x[:, 1] - med[1])))
    value = math.sin(0.5 * math.pi * raw) if consistent else raw
    return CorrEstimate("quadrant", _clip(value), n_used=x.shape[0], diagnostics={"raw": raw})
