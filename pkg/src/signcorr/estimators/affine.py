"""Correlation read off affine equivariant scatter estimators: Tyler's
shape M-estimator, raw and reweighted MCD, Stahel-Donoho and the
biweight S-estimator. All hot loops are numba kernels specialised to p = 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numba as nb
import numpy as np
from scipy import integrate, optimize

from .._validate import as_data
from ..distributions import as_generator
from ..errors import ConvergenceError, DegeneracyError, DomainError
from ..numerics import SymMat2, chi2_cdf, chi2_quantile
from ..sscm import spatial_median
from ..types import CorrEstimate, ScatterEstimate
from .scale import MAD_CONSTANT

__all__ = [
    "corr_from_cov",
    "tyler_shape",
    "tyler_residual",
    "mcd",
    "mcd_consistency",
    "mcd_reweight_consistency",
    "concentrate",
    "stahel_donoho",
    "s_constants",
    "s_estimator",
    "biweight_rho",
]

_DET_TINY = 1e-300


def corr_from_cov(v) -> float:
    v = v if isinstance(v, SymMat2) else SymMat2.from_array(v)
    if not (v.s11 > 0.0 and v.s22 > 0.0):
        raise DomainError("covariance diagonal must be positive")
    r = v.s12 / math.sqrt(v.s11 * v.s22)
    return min(1.0, max(-1.0, r))


def _result(ident, method, loc, c11, c12, c22, n_used, iterations, diag):
    cov = SymMat2(float(c11), float(c12), float(c22))
    scatter = ScatterEstimate(np.asarray(loc, dtype=float).copy(), cov, method,
                              int(iterations), dict(diag))
    return scatter, CorrEstimate(ident, corr_from_cov(cov), n_used=int(n_used),
                                 diagnostics=dict(diag))


# ----------------------------------------------------------------- helpers

@nb.njit(cache=True, nogil=True)
def _mahal2(x, m0, m1, c11, c12, c22, out):
    det = c11 * c22 - c12 * c12
    i11 = c22 / det
    i12 = -c12 / det
    i22 = c11 / det
    for i in range(x.shape[0]):
        a = x[i, 0] - m0
        b = x[i, 1] - m1
        out[i] = i11 * a * a + 2.0 * i12 * a * b + i22 * b * b


@nb.njit(cache=True, nogil=True)
def _subset_moments(x, idx, m):
    m0 = 0.0
    m1 = 0.0
    for k in range(m):
        m0 += x[idx[k], 0]
        m1 += x[idx[k], 1]
    m0 /= m
    m1 /= m
    c11 = 0.0
    c12 = 0.0
    c22 = 0.0
    for k in range(m):
        a = x[idx[k], 0] - m0
        b = x[idx[k], 1] - m1
        c11 += a * a
        c12 += a * b
        c22 += b * b
    return m0, m1, c11 / (m - 1), c12 / (m - 1), c22 / (m - 1)


@nb.njit(cache=True, nogil=True)
def _select(a, k):
    # k-th smallest of a (0-based), partially reordering a in place
    lo = 0
    hi = a.shape[0] - 1
    while hi > lo:
        mid = (lo + hi) >> 1
        # median-of-three pivot
        if a[mid] < a[lo]:
            a[mid], a[lo] = a[lo], a[mid]
        if a[hi] < a[lo]:
            a[hi], a[lo] = a[lo], a[hi]
        if a[hi] < a[mid]:
            a[hi], a[mid] = a[mid], a[hi]
        piv = a[mid]
        i = lo
        j = hi
        while i <= j:
            while a[i] < piv:
                i += 1
            while a[j] > piv:
                j -= 1
            if i <= j:
                a[i], a[j] = a[j], a[i]
                i += 1
                j -= 1
        if k <= j:
            hi = j
        elif k >= i:
            lo = i
        else:
            return a[k]
    return a[k]


@nb.njit(cache=True, nogil=True)
def _median_inplace(a):
    n = a.shape[0]
    h = n // 2
    m = _select(a, h)
    if n % 2 == 1:
        return m
    # lower middle is the max of the left part after selection
    lo = a[0]
    for i in range(1, h):
        if a[i] > lo:
            lo = a[i]
    return 0.5 * (lo + m)


# -------------------------------------------------------------------- Tyler

@nb.njit(cache=True, nogil=True)
def _tyler_map(r, v11, v12, v22):
    det = v11 * v22 - v12 * v12
    i11 = v22 / det
    i12 = -v12 / det
    i22 = v11 / det
    m11 = 0.0
    m12 = 0.0
    m22 = 0.0
    n = r.shape[0]
    for i in range(n):
        a = r[i, 0]
        b = r[i, 1]
        q = i11 * a * a + 2.0 * i12 * a * b + i22 * b * b
        m11 += a * a / q
        m12 += a * b / q
        m22 += b * b / q
    f = 2.0 / n
    return m11 * f, m12 * f, m22 * f


@nb.njit(cache=True, nogil=True)
def _tyler_kernel(r, tol, max_iter):
    v11 = 1.0
    v12 = 0.0
    v22 = 1.0
    for it in range(max_iter):
        m11, m12, m22 = _tyler_map(r, v11, v12, v22)
        t = 0.5 * (m11 + m22)
        m11 /= t
        m12 /= t
        m22 /= t
        diff = max(abs(m11 - v11), abs(m12 - v12), abs(m22 - v22))
        v11 = m11
        v12 = m12
        v22 = m22
        if v11 * v22 - v12 * v12 <= 1e-15:
            return v11, v12, v22, it + 1, 2
        if diff <= tol:
            return v11, v12, v22, it + 1, 0
    return v11, v12, v22, max_iter, 1


def tyler_residual(data, center, v) -> float:
    """Max-norm distance between V and one application of the fixed-point map."""
    x = as_data(data, p=2)
    r = x - np.asarray(center, dtype=float)
    r = r[np.any(r != 0.0, axis=1)]
    v = v if isinstance(v, SymMat2) else SymMat2.from_array(v)
    m = _tyler_map(np.ascontiguousarray(r), v.s11, v.s12, v.s22)
    return max(abs(m[0] - v.s11), abs(m[1] - v.s12), abs(m[2] - v.s22))


def tyler_shape(data, center=None, tol: float = 1e-10, max_iter: int = 500):
    """Tyler's shape matrix, normalised to trace 2, about ``center``
    (the spatial median when omitted). Observations equal to the center
    carry no direction and are dropped; the average runs over the rest."""
    x = as_data(data, p=2, min_n=3)
    mu = spatial_median(x) if center is None else np.asarray(center, dtype=float)
    r = x - mu
    r = np.ascontiguousarray(r[np.any(r != 0.0, axis=1)])
    if r.shape[0] < 2:
        raise DegeneracyError("fewer than two observations off the center")
    v11, v12, v22, it, status = _tyler_kernel(r, tol, max_iter)
    if status == 2:
        raise DegeneracyError("data concentrated on a line through the center")
    if status == 1:
        raise ConvergenceError("Tyler iteration did not converge",
                               last=np.array([[v11, v12], [v12, v22]]), iterations=it)
    return _result("tyler", "Tyler", mu, v11, v12, v22, r.shape[0], it,
                   {"n_dropped": x.shape[0] - r.shape[0]})


# ---------------------------------------------------------------------- MCD

@nb.njit(cache=True, nogil=True)
def _select_h(d2, h, work, idx):
    # indices of the h smallest entries of d2 (ties broken by position)
    n = d2.shape[0]
    for i in range(n):
        work[i] = d2[i]
    thr = _select(work, h - 1)
    k = 0
    for i in range(n):
        if d2[i] < thr:
            idx[k] = i
            k += 1
    for i in range(n):
        if k >= h:
            break
        if d2[i] == thr:
            idx[k] = i
            k += 1


@nb.njit(cache=True, nogil=True)
def _cstep(x, h, m0, m1, c11, c12, c22, d2, work, idx):
    _mahal2(x, m0, m1, c11, c12, c22, d2)
    _select_h(d2, h, work, idx)
    return _subset_moments(x, idx, h)


@nb.njit(cache=True, nogil=True)
def _floyd3(n, u):
    # uniform random 3-subset of range(n) from three uniforms
    out = np.empty(3, dtype=np.int64)
    k = 0
    for j in range(n - 3, n):
        t = int(u[k] * (j + 1))
        if t > j:
            t = j
        dup = False
        for q in range(k):
            if out[q] == t:
                dup = True
        out[k] = j if dup else t
        k += 1
    return out


@nb.njit(cache=True, nogil=True)
def _mcd_search(x, h, uniforms, n_keep, max_steps):
    n = x.shape[0]
    n_starts = uniforms.shape[0]
    d2 = np.empty(n)
    work = np.empty(n)
    idx = np.empty(n, dtype=np.int64)
    par = np.empty((n_starts, 5))
    dets = np.full(n_starts, np.inf)
    for s in range(n_starts):
        sub = _floyd3(n, uniforms[s])
        m0, m1, c11, c12, c22 = _subset_moments(x, sub, 3)
        if c11 * c22 - c12 * c12 <= _DET_TINY * 1e200 * (c11 * c22 + 1e-300):
            continue
        ok = True
        for _ in range(2):
            m0, m1, c11, c12, c22 = _cstep(x, h, m0, m1, c11, c12, c22, d2, work, idx)
            if not c11 * c22 - c12 * c12 > 1e-14 * c11 * c22:
                ok = False
                break
        if not ok:
            continue
        par[s, 0] = m0
        par[s, 1] = m1
        par[s, 2] = c11
        par[s, 3] = c12
        par[s, 4] = c22
        dets[s] = c11 * c22 - c12 * c12
    order = np.argsort(dets)
    best = np.inf
    bp = np.zeros(5)
    total = 0
    for r in range(min(n_keep, n_starts)):
        s = order[r]
        if not np.isfinite(dets[s]):
            break
        m0, m1, c11, c12, c22 = par[s, 0], par[s, 1], par[s, 2], par[s, 3], par[s, 4]
        det = dets[s]
        for _ in range(max_steps):
            total += 1
            n0, n1, e11, e12, e22 = _cstep(x, h, m0, m1, c11, c12, c22, d2, work, idx)
            nd = e11 * e22 - e12 * e12
            if not nd > 1e-14 * e11 * e22:
                break
            m0, m1, c11, c12, c22 = n0, n1, e11, e12, e22
            if nd >= det:
                det = nd
                break
            det = nd
        if det < best:
            best = det
            bp[0] = m0
            bp[1] = m1
            bp[2] = c11
            bp[3] = c12
            bp[4] = c22
    return bp, best, total


def mcd_consistency(alpha: float, p: int = 2) -> float:
    if alpha == 0.0:
        return 1.0
    q = chi2_quantile(1.0 - alpha, p)
    return (1.0 - alpha) / chi2_cdf(q, p + 2)


def mcd_reweight_consistency(p: int = 2, level: float = 0.975) -> float:
    q = chi2_quantile(level, p)
    return level / chi2_cdf(q, p + 2)


def concentrate(data, subset, h: int, steps: int = 50) -> list[float]:
    """Run C-steps from the given starting subset, returning the determinant
    after each step (the first entry is the starting subset's)."""
    x = as_data(data, p=2)
    sub = np.asarray(subset, dtype=np.int64)
    n = x.shape[0]
    d2 = np.empty(n)
    work = np.empty(n)
    idx = np.empty(n, dtype=np.int64)
    m0, m1, c11, c12, c22 = _subset_moments(x, sub, sub.shape[0])
    dets = [c11 * c22 - c12 * c12]
    for _ in range(steps):
        if not dets[-1] > 0.0:
            break
        m0, m1, c11, c12, c22 = _cstep(x, h, m0, m1, c11, c12, c22, d2, work, idx)
        dets.append(c11 * c22 - c12 * c12)
        if dets[-1] == dets[-2]:
            break
    return dets


def _weighted_moments(x, w):
    sw = w.sum()
    mu = (w[:, None] * x).sum(axis=0) / sw
    r = x - mu
    c = (w[:, None, None] * (r[:, :, None] * r[:, None, :])).sum(axis=0)
    return mu, c, sw


def mcd(data, alpha: float = 0.5, reweight: bool = True, n_starts: int = 500,
        seed=None, n_keep: int = 10, max_steps: int = 100):
    """FAST-MCD with h = floor((1 - alpha) n); ids ``wmcd`` / ``rmcd``."""
    x = as_data(data, p=2)
    n = x.shape[0]
    if not 0.0 <= alpha < 1.0:
        raise DomainError("alpha must lie in [0, 1)")
    h = int(math.floor((1.0 - alpha) * n + 1e-9))
    if n < 6 or h < 3:
        raise DomainError("need n >= 6 and h >= 3")
    if h >= n:
        m0, m1, c11, c12, c22 = _subset_moments(x, np.arange(n, dtype=np.int64), n)
        det = c11 * c22 - c12 * c12
        steps = 0
    else:
        gen = as_generator(seed)
        u = gen.random((n_starts, 3))
        bp, det, steps = _mcd_search(x, h, u, n_keep, max_steps)
        if not np.isfinite(det):
            raise DegeneracyError("all candidate subsets are singular")
        m0, m1, c11, c12, c22 = bp
    if not det > 0.0:
        raise DegeneracyError("singular MCD covariance")
    cf = mcd_consistency(alpha)
    loc = np.array([m0, m1])
    raw = (c11 * cf, c12 * cf, c22 * cf)
    diag = {"h": h, "det": det, "consistency": cf, "csteps": int(steps)}
    if not reweight:
        return _result("rmcd", "RawMCD", loc, *raw, n, steps, diag)
    d2 = np.empty(n)
    _mahal2(x, m0, m1, *raw, d2)
    w = (d2 <= chi2_quantile(0.975, 2)).astype(float)
    mu, c, sw = _weighted_moments(x, w)
    if sw < 3:
        raise DegeneracyError("fewer than three observations kept by reweighting")
    c = c / (sw - 1.0) * mcd_reweight_consistency()
    if not c[0, 0] * c[1, 1] - c[0, 1] ** 2 > 0.0:
        raise DegeneracyError("singular reweighted covariance")
    diag.update({"n_kept": int(sw), "raw_corr": corr_from_cov(SymMat2(*raw))})
    return _result("wmcd", "WeightedMCD", mu, c[0, 0], c[0, 1], c[1, 1], n, steps, diag)


def mcd_both(data, alpha: float = 0.5, n_starts: int = 500, seed=None):
    """Raw and reweighted MCD from a single subset search."""
    x = as_data(data, p=2)
    wm = mcd(x, alpha, True, n_starts, seed)
    cf = wm[0].diagnostics["consistency"]
    rho_raw = wm[0].diagnostics["raw_corr"]
    raw = CorrEstimate("rmcd", rho_raw, n_used=x.shape[0],
                       diagnostics={"h": wm[0].diagnostics["h"], "consistency": cf})
    return raw, wm[1]


# ----------------------------------------------------------- Stahel-Donoho

@nb.njit(cache=True, nogil=True)
def _sd_outlyingness_select(x, dirs):
    """Reference implementation: two selections per direction."""
    n = x.shape[0]
    r = np.zeros(n)
    proj = np.empty(n)
    dev = np.empty(n)
    buf = np.empty(n)
    valid = 0
    for k in range(dirs.shape[0]):
        a0 = dirs[k, 0]
        a1 = dirs[k, 1]
        for q in range(n):
            proj[q] = a0 * x[q, 0] + a1 * x[q, 1]
            buf[q] = proj[q]
        med = _median_inplace(buf)
        for q in range(n):
            dev[q] = abs(proj[q] - med)
            buf[q] = dev[q]
        s = _median_inplace(buf) * 1.482602218505602
        if not s > 0.0:
            continue
        valid += 1
        for q in range(n):
            t = dev[q] / s
            if t > r[q]:
                r[q] = t
    return r, valid


@nb.njit(cache=True, nogil=True)
def _sorted_mad(v, med):
    # median of |v - med| for sorted v by merging the two monotone halves
    n = v.shape[0]
    j = n // 2
    i = j - 1
    need = n // 2
    prev = 0.0
    cur = 0.0
    for _ in range(need + 1):
        prev = cur
        if i < 0:
            cur = v[j] - med
            j += 1
        elif j >= n:
            cur = med - v[i]
            i -= 1
        else:
            dl = med - v[i]
            dr = v[j] - med
            if dl <= dr:
                cur = dl
                i -= 1
            else:
                cur = dr
                j += 1
    if n % 2 == 1:
        return cur
    return 0.5 * (prev + cur)


@nb.njit(cache=True, nogil=True)
def _sd_outlyingness(x, dirs):
    """Outlyingness over unit directions sorted by angle on [0, pi).

    Neighbouring directions order the projections almost identically, so
    the sorted order is carried along and repaired by insertion sort.
    """
    n = x.shape[0]
    r = np.zeros(n)
    order = np.arange(n)
    vals = np.empty(n)
    valid = 0
    for k in range(dirs.shape[0]):
        a0 = dirs[k, 0]
        a1 = dirs[k, 1]
        for q in range(n):
            o = order[q]
            vals[q] = a0 * x[o, 0] + a1 * x[o, 1]
        for q in range(1, n):
            v = vals[q]
            o = order[q]
            m = q - 1
            while m >= 0 and vals[m] > v:
                vals[m + 1] = vals[m]
                order[m + 1] = order[m]
                m -= 1
            vals[m + 1] = v
            order[m + 1] = o
        h = n // 2
        med = vals[h] if n % 2 == 1 else 0.5 * (vals[h - 1] + vals[h])
        s = _sorted_mad(vals, med) * 1.482602218505602
        if not s > 0.0:
            continue
        valid += 1
        for q in range(n):
            t = abs(vals[q] - med) / s
            o = order[q]
            if t > r[o]:
                r[o] = t
    return r, valid


def _pair_directions(x, pairs):
    d = x[pairs[:, 1]] - x[pairs[:, 0]]
    nrm = np.hypot(d[:, 0], d[:, 1])
    keep = nrm > 0.0
    d = d[keep] / nrm[keep, None]
    # project on the normal of the line through each pair; these directions
    # map to one another under affine maps, so the outlyingness is invariant
    d = np.column_stack((-d[:, 1], d[:, 0]))
    flip = (d[:, 1] < 0.0) | ((d[:, 1] == 0.0) & (d[:, 0] < 0.0))
    d[flip] = -d[flip]
    ang = np.arctan2(d[:, 1], d[:, 0])
    return np.ascontiguousarray(d[np.argsort(ang, kind="stable")])


def _direction_pairs(n, n_dirs, seed):
    if n * (n - 1) // 2 <= n_dirs:
        i, j = np.triu_indices(n, k=1)
        return np.ascontiguousarray(np.column_stack((i, j)).astype(np.int64))
    gen = as_generator(seed)
    u = gen.random((n_dirs, 2))
    i = np.minimum((u[:, 0] * n).astype(np.int64), n - 1)
    j = np.minimum((u[:, 1] * (n - 1)).astype(np.int64), n - 2)
    j = j + (j >= i)  # distinct from i
    return np.ascontiguousarray(np.column_stack((i, j)))


def stahel_donoho(data, n_dirs: int = 10_000, seed=None):
    """Stahel-Donoho weighted mean and covariance, outlyingness from median
    and normalised MAD of projections on the normals of pair lines."""
    x = as_data(data, p=2, min_n=4)
    n = x.shape[0]
    dirs = _pair_directions(x, _direction_pairs(n, n_dirs, seed))
    r, valid = _sd_outlyingness(x, dirs)
    if valid == 0:
        raise DegeneracyError("every projection direction has zero MAD")
    c = math.sqrt(chi2_quantile(0.95, 2))
    w = np.ones(n)
    big = r > c
    w[big] = (c / r[big]) ** 2
    mu, cov, sw = _weighted_moments(x, w)
    cov = cov / sw
    if not cov[0, 0] * cov[1, 1] - cov[0, 1] ** 2 > 0.0:
        raise DegeneracyError("singular Stahel-Donoho covariance")
    return _result("stahel_donoho", "StahelDonoho", mu, cov[0, 0], cov[0, 1], cov[1, 1],
                   n, 0, {"n_directions": int(valid), "min_weight": float(w.min())})


# -------------------------------------------------------------- S-estimator

def biweight_rho(y, c: float):
    y = np.asarray(y, dtype=float)
    t = y * y
    v = t / 2.0 - t * t / (2.0 * c * c) + t ** 3 / (6.0 * c ** 4)
    return np.where(np.abs(y) >= c, c * c / 6.0, v)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(64)


def _expected_rho(c: float) -> float:
    # E rho_c(||Z||), Z standard bivariate normal: ||Z|| has density t exp(-t^2/2)
    t = 0.5 * c * (_GL_X + 1.0)
    body = 0.5 * c * float(np.sum(_GL_W * biweight_rho(t, c) * t * np.exp(-0.5 * t * t)))
    return body + (c * c / 6.0) * math.exp(-0.5 * c * c)


def _expected_rho_quad(c: float) -> float:
    f = lambda t: float(biweight_rho(t, c)) * t * math.exp(-0.5 * t * t)
    body, _ = integrate.quad(f, 0.0, c, epsabs=1e-14, epsrel=1e-13)
    return body + (c * c / 6.0) * math.exp(-0.5 * c * c)


@lru_cache(maxsize=16)
def s_constants(r: float = 0.5) -> tuple[float, float]:
    """(c, b) with b = E rho_c(||Z||) and r c^2 / 6 = b."""
    if not 0.0 < r <= 0.5:
        raise DomainError("breakdown point must lie in (0, 1/2]")
    c = optimize.brentq(lambda c: r * c * c / 6.0 - _expected_rho(c), 0.5, 50.0,
                        xtol=1e-15, rtol=1e-15, maxiter=200)
    return c, _expected_rho(c)


@nb.njit(cache=True, nogil=True)
def _rho_bw(t, c):
    if t >= c:
        return c * c / 6.0
    u = t * t
    return u / 2.0 - u * u / (2.0 * c * c) + u * u * u / (6.0 * c ** 4)


@nb.njit(cache=True, nogil=True)
def _psi_bw(t, c):
    if t >= c:
        return 0.0
    q = 1.0 - (t / c) ** 2
    return t * q * q


@nb.njit(cache=True, nogil=True)
def _s_scale(d, c, b, s0):
    """Solve ave rho(d_i / s) = b for s > 0 by safeguarded Newton."""
    n = d.shape[0]

    def f(s):
        acc = 0.0
        for i in range(n):
            acc += _rho_bw(d[i] / s, c)
        return acc / n - b

    s = s0
    fs = f(s)
    lo = s
    hi = s
    if fs > 0.0:
        while fs > 0.0:
            lo = hi
            hi = hi * 2.0
            fs = f(hi)
        s = hi
    else:
        while fs <= 0.0:
            hi = lo
            lo = lo * 0.5
            fs = f(lo)
            if lo < 1e-300:
                return -1.0
        s = lo
    # f(lo) > 0 >= f(hi)
    s = 0.5 * (lo + hi)
    for _ in range(200):
        fv = 0.0
        dv = 0.0
        for i in range(n):
            t = d[i] / s
            fv += _rho_bw(t, c)
            dv -= _psi_bw(t, c) * t / s
        fv = fv / n - b
        dv = dv / n
        if fv > 0.0:
            lo = s
        else:
            hi = s
        step_ok = dv < 0.0
        ns = s - fv / dv if step_ok else 0.5 * (lo + hi)
        if not (lo < ns < hi):
            ns = 0.5 * (lo + hi)
        if abs(ns - s) <= 1e-15 * s or hi - lo <= 4e-16 * hi:
            return ns
        s = ns
    return s


@nb.njit(cache=True, nogil=True)
def _s_dist(x, m0, m1, g11, g12, g22, d):
    _mahal2(x, m0, m1, g11, g12, g22, d)
    for i in range(d.shape[0]):
        d[i] = math.sqrt(max(d[i], 0.0))


@nb.njit(cache=True, nogil=True)
def _s_irls(x, c, b, m0, m1, g11, g12, g22, sigma, steps, tol):
    """Up to ``steps`` reweighting iterations; returns the final state, the
    number of steps taken and 0 (converged), 1 (not yet) or 2 (degenerate)."""
    n = x.shape[0]
    d = np.empty(n)
    for it in range(steps):
        _s_dist(x, m0, m1, g11, g12, g22, d)
        sigma = _s_scale(d, c, b, sigma)
        if sigma <= 0.0:
            return m0, m1, g11, g12, g22, sigma, it, 2
        sw = 0.0
        a0 = 0.0
        a1 = 0.0
        for i in range(n):
            t = d[i] / sigma
            if t < c:
                q = 1.0 - (t / c) ** 2
                w = q * q
                sw += w
                a0 += w * x[i, 0]
                a1 += w * x[i, 1]
        if sw <= 0.0:
            return m0, m1, g11, g12, g22, sigma, it, 2
        n0 = a0 / sw
        n1 = a1 / sw
        e11 = 0.0
        e12 = 0.0
        e22 = 0.0
        for i in range(n):
            t = d[i] / sigma
            if t < c:
                q = 1.0 - (t / c) ** 2
                w = q * q
                u = x[i, 0] - n0
                v = x[i, 1] - n1
                e11 += w * u * u
                e12 += w * u * v
                e22 += w * v * v
        det = e11 * e22 - e12 * e12
        if not det > 1e-14 * e11 * e22:
            return m0, m1, g11, g12, g22, sigma, it, 2
        k = 1.0 / math.sqrt(det)
        e11 *= k
        e12 *= k
        e22 *= k
        scale = math.sqrt(g11 + g22) * sigma
        ch = max(abs(e11 - g11), abs(e12 - g12), abs(e22 - g22))
        cm = max(abs(n0 - m0), abs(n1 - m1)) / scale
        m0, m1, g11, g12, g22 = n0, n1, e11, e12, e22
        if ch <= tol and cm <= tol:
            _s_dist(x, m0, m1, g11, g12, g22, d)
            sigma = _s_scale(d, c, b, sigma)
            return m0, m1, g11, g12, g22, sigma, it + 1, 0
    _s_dist(x, m0, m1, g11, g12, g22, d)
    sigma = _s_scale(d, c, b, sigma)
    return m0, m1, g11, g12, g22, sigma, steps, 1


@nb.njit(cache=True, nogil=True)
def _s_starts(x, h, uniforms, c, b):
    n = x.shape[0]
    k = uniforms.shape[0]
    d2 = np.empty(n)
    work = np.empty(n)
    idx = np.empty(n, dtype=np.int64)
    d = np.empty(n)
    out = np.full((k, 6), np.nan)
    for s in range(k):
        sub = _floyd3(n, uniforms[s])
        m0, m1, c11, c12, c22 = _subset_moments(x, sub, 3)
        if not c11 * c22 - c12 * c12 > 1e-12 * (c11 * c22):
            continue
        ok = True
        for _ in range(2):
            m0, m1, c11, c12, c22 = _cstep(x, h, m0, m1, c11, c12, c22, d2, work, idx)
            if not c11 * c22 - c12 * c12 > 1e-14 * c11 * c22:
                ok = False
                break
        if not ok:
            continue
        k0 = 1.0 / math.sqrt(c11 * c22 - c12 * c12)
        g11 = c11 * k0
        g12 = c12 * k0
        g22 = c22 * k0
        _s_dist(x, m0, m1, g11, g12, g22, d)
        s0 = np.median(d)
        if not s0 > 0.0:
            continue
        m0, m1, g11, g12, g22, sig, it, st = _s_irls(x, c, b, m0, m1, g11, g12, g22, s0, 2, 0.0)
        if st == 2 or not sig > 0.0:
            continue
        out[s, 0] = m0
        out[s, 1] = m1
        out[s, 2] = g11
        out[s, 3] = g12
        out[s, 4] = g22
        out[s, 5] = sig
    return out


def s_estimator(data, breakdown: float = 0.5, n_starts: int = 20, n_refine: int = 1,
                seed=None, max_iter: int = 200, tol: float = 1e-11):
    """Biweight S-estimator of location and scatter, id ``s``.

    Starts come from random 3-subsets improved by two C-steps (h about n/2)
    and two reweighting steps; the best few are iterated to convergence and
    the one with the smallest scale wins.
    """
    x = as_data(data, p=2)
    n = x.shape[0]
    if n < 6:
        raise DomainError("need n >= 6")
    c, b = s_constants(breakdown)
    h = n // 2 + 1
    u = as_generator(seed).random((n_starts, 3))
    starts = _s_starts(x, h, u, c, b)
    good = np.flatnonzero(np.isfinite(starts[:, 5]))
    if good.size == 0:
        raise DegeneracyError("all S-estimator starts are singular")
    good = good[np.argsort(starts[good, 5], kind="stable")][:n_refine]
    best = None
    last_fail = None
    for s in good:
        m0, m1, g11, g12, g22, sig = starts[s]
        res = _s_irls(x, c, b, m0, m1, g11, g12, g22, sig, max_iter, tol)
        if res[7] == 0 and res[5] > 0.0:
            if best is None or res[5] < best[5]:
                best = res
        else:
            last_fail = res
    if best is None:
        if last_fail is not None and last_fail[7] == 1:
            raise ConvergenceError("S-estimator reweighting did not converge",
                                   iterations=max_iter)
        raise DegeneracyError("S-estimator reweighting collapsed")
    m0, m1, g11, g12, g22, sig, it, _ = best
    s2 = sig * sig
    d = np.empty(n)
    _s_dist(x, m0, m1, g11 * s2, g12 * s2, g22 * s2, d)
    feas = float(np.mean(biweight_rho(d, c))) - b
    return _result("s", "SEstimator", (m0, m1), g11 * s2, g12 * s2, g22 * s2, n, it,
                   {"c": c, "b": b, "scale": sig, "constraint_gap": feas})
