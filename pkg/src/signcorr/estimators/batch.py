"""Fast paths evaluating one estimator on a stack of samples.

Each kernel mirrors the scalar estimator of the same id and is checked
against it in the tests; they exist because per-call Python overhead
dominates at the sample sizes of the simulations. Status codes: 0 ok,
1 degenerate input, 2 iteration cap reached.
"""

from __future__ import annotations

import math

import numba as nb
import numpy as np

from ..numerics import std_normal_quantile
from ..sscm import MEDIAN_MAX_ITER, MEDIAN_TOL, _corr_kernel, _sscm_kernel, _weiszfeld
from .affine import _median_inplace, _tyler_kernel
from .nonparametric import _kendall_brute, _kendall_knight, _normal_scores_norm
from .scale import MAD_CONSTANT, QN_CONSTANT, TAU_C1, TAU_C2, _kth_pair_gap

__all__ = ["BATCH_IDS", "batch_estimate"]


@nb.njit(cache=True, nogil=True)
def _clip(r):
    return min(1.0, max(-1.0, r))


@nb.njit(cache=True, nogil=True)
def _constant(v):
    for i in range(1, v.shape[0]):
        if v[i] != v[0]:
            return False
    return True


@nb.njit(cache=True, nogil=True)
def _pearson(x):
    n = x.shape[0]
    m0 = 0.0
    m1 = 0.0
    for i in range(n):
        m0 += x[i, 0]
        m1 += x[i, 1]
    m0 /= n
    m1 /= n
    sxx = 0.0
    syy = 0.0
    sxy = 0.0
    for i in range(n):
        a = x[i, 0] - m0
        b = x[i, 1] - m1
        sxx += a * a
        syy += b * b
        sxy += a * b
    if sxx == 0.0 or syy == 0.0:
        return np.nan, 1
    return _clip(sxy / math.sqrt(sxx * syy)), 0


@nb.njit(cache=True, nogil=True)
def _spatial(x):
    mu, it, res, status = _weiszfeld(x, MEDIAN_TOL, MEDIAN_MAX_ITER)
    if status != 0:
        return np.nan, 2
    s, used = _sscm_kernel(x, mu)
    return _corr_kernel(s[0, 0], s[0, 1], s[1, 1])


@nb.njit(cache=True, nogil=True)
def _tyler(x):
    mu, it, res, status = _weiszfeld(x, MEDIAN_TOL, MEDIAN_MAX_ITER)
    if status != 0:
        return np.nan, 2
    n = x.shape[0]
    r = np.empty((n, 2))
    m = 0
    for i in range(n):
        a = x[i, 0] - mu[0]
        b = x[i, 1] - mu[1]
        if a != 0.0 or b != 0.0:
            r[m, 0] = a
            r[m, 1] = b
            m += 1
    if m < 2:
        return np.nan, 1
    v11, v12, v22, it, st = _tyler_kernel(r[:m], 1e-10, 500)
    if st == 2:
        return np.nan, 1
    if st == 1:
        return np.nan, 2
    return _clip(v12 / math.sqrt(v11 * v22)), 0


@nb.njit(cache=True, nogil=True)
def _median_copy(v):
    return _median_inplace(v.copy())


@nb.njit(cache=True, nogil=True)
def _sgn(t):
    return 1.0 if t > 0.0 else (-1.0 if t < 0.0 else 0.0)


@nb.njit(cache=True, nogil=True)
def _quadrant(x):
    n = x.shape[0]
    m0 = _median_copy(x[:, 0])
    m1 = _median_copy(x[:, 1])
    acc = 0.0
    for i in range(n):
        acc += _sgn(x[i, 0] - m0) * _sgn(x[i, 1] - m1)
    raw = acc / n
    return _clip(math.sin(0.5 * math.pi * raw)), 0


@nb.njit(cache=True, nogil=True)
def _kendall(x):
    n = x.shape[0]
    a = np.ascontiguousarray(x[:, 0])
    b = np.ascontiguousarray(x[:, 1])
    if _constant(a) or _constant(b):
        return np.nan, 1
    if n <= 64:
        s = _kendall_brute(a, b)
    else:
        o = np.argsort(b, kind="mergesort")
        o = o[np.argsort(a[o], kind="mergesort")]
        s = _kendall_knight(a[o], b[o])
    raw = 2.0 * s / (n * (n - 1))
    return _clip(math.sin(0.5 * math.pi * raw)), 0


@nb.njit(cache=True, nogil=True)
def _midranks(v):
    n = v.shape[0]
    o = np.argsort(v, kind="mergesort")
    r = np.empty(n)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and v[o[j + 1]] == v[o[i]]:
            j += 1
        avg = 0.5 * (i + j) + 1.0
        for k in range(i, j + 1):
            r[o[k]] = avg
        i = j + 1
    return r


@nb.njit(cache=True, nogil=True)
def _spearman(x):
    n = x.shape[0]
    if _constant(x[:, 0]) or _constant(x[:, 1]):
        return np.nan, 1
    rx = _midranks(x[:, 0])
    ry = _midranks(x[:, 1])
    rx -= rx.mean()
    ry -= ry.mean()
    raw = _clip(np.dot(rx, ry) / math.sqrt(np.dot(rx, rx) * np.dot(ry, ry)))
    return _clip(2.0 * math.sin(math.pi * raw / 6.0)), 0


@nb.njit(cache=True, nogil=True)
def _gaussian_rank(x, table, norm):
    # table[k] = Phi^{-1}(k / (2 (n + 1))), indexed by twice the midrank
    n = x.shape[0]
    if _constant(x[:, 0]) or _constant(x[:, 1]):
        return np.nan, 1
    rx = _midranks(x[:, 0])
    ry = _midranks(x[:, 1])
    acc = 0.0
    for i in range(n):
        acc += table[int(2.0 * rx[i])] * table[int(2.0 * ry[i])]
    return _clip(acc / norm), 0


@nb.njit(cache=True, nogil=True)
def _qn(v):
    n = v.shape[0]
    h = n // 2 + 1
    k = h * (h - 1) // 2
    return QN_CONSTANT * _kth_pair_gap(np.sort(v), k)


@nb.njit(cache=True, nogil=True)
def _tau(v):
    n = v.shape[0]
    med = _median_copy(v)
    dev = np.abs(v - med)
    s0 = _median_inplace(dev) * MAD_CONSTANT
    if s0 <= 0.0:
        return 0.0
    sw = 0.0
    swx = 0.0
    for i in range(n):
        z = (v[i] - med) / s0
        if abs(z) <= TAU_C1:
            w = (1.0 - (z / TAU_C1) ** 2) ** 2
            sw += w
            swx += w * v[i]
    mu = swx / sw
    acc = 0.0
    for i in range(n):
        z = (v[i] - mu) / s0
        acc += min(z * z, TAU_C2 * TAU_C2)
    return math.sqrt(s0 * s0 * acc / n)


@nb.njit(cache=True, nogil=True)
def _gk(x, use_qn):
    a0 = np.ascontiguousarray(x[:, 0])
    a1 = np.ascontiguousarray(x[:, 1])
    sa = _qn(a0) if use_qn else _tau(a0)
    sb = _qn(a1) if use_qn else _tau(a1)
    if not (sa > 0.0 and sb > 0.0):
        return np.nan, 1
    zx = a0 / sa
    zy = a1 / sb
    su = _qn(zx + zy) if use_qn else _tau(zx + zy)
    sv = _qn(zx - zy) if use_qn else _tau(zx - zy)
    su *= su
    sv *= sv
    if su + sv == 0.0:
        return np.nan, 1
    return _clip((su - sv) / (su + sv)), 0


@nb.njit(cache=True, nogil=True)
def _run(xs, code, table, norm):
    reps = xs.shape[0]
    out = np.empty(reps)
    st = np.zeros(reps, dtype=np.int8)
    for k in range(reps):
        x = xs[k]
        if code == 0:
            v, s = _pearson(x)
        elif code == 1:
            v, s = _spatial(x)
        elif code == 2:
            v, s = _quadrant(x)
        elif code == 3:
            v, s = _kendall(x)
        elif code == 4:
            v, s = _spearman(x)
        elif code == 5:
            v, s = _gaussian_rank(x, table, norm)
        elif code == 6:
            v, s = _gk(x, True)
        elif code == 7:
            v, s = _gk(x, False)
        else:
            v, s = _tyler(x)
        out[k] = v
        st[k] = s
    return out, st


_CODES = {"pearson": 0, "spatial_sign": 1, "quadrant": 2, "kendall": 3, "spearman": 4,
          "gaussian_rank": 5, "gk_qn": 6, "gk_tau": 7, "tyler": 8}
BATCH_IDS = tuple(_CODES)


def batch_estimate(xs, ident: str) -> tuple[np.ndarray, np.ndarray]:
    """Values and status codes of estimator ``ident`` on each xs[k] (reps, n, 2)."""
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    code = _CODES[ident]
    n = xs.shape[1]
    if code == 5:
        table = np.zeros(2 * n + 2)
        table[2:2 * n + 1] = std_normal_quantile(np.arange(2, 2 * n + 1) / (2.0 * (n + 1)))
        norm = _normal_scores_norm(n)
    else:
        table = np.zeros(1)
        norm = 1.0
    return _run(xs, code, table, norm)
