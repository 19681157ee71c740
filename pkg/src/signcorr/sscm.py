"""Spatial signs, the spatial median, the spatial sign covariance matrix
(SSCM) and the spatial sign correlation coefficient."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numba import njit

from ._validate import as_data, as_vector
from .errors import ConvergenceError, DegeneracyError, DomainError
from .numerics import SymMat2, _as_symmat, eig_sym2, std_normal_quantile
from .types import CorrEstimate

__all__ = [
    "Shape2",
    "spatial_sign",
    "spatial_median",
    "sscm",
    "sscm_to_corr",
    "shape_from_sscm2",
    "spatial_sign_corr",
    "two_stage_spatial_sign_corr",
    "sscorr_ci",
]

MEDIAN_TOL = 1e-10
MEDIAN_MAX_ITER = 1000
# relative size of the smallest SSCM eigenvalue below which the signs are
# treated as collinear
_COLLINEAR = 1e-12


@dataclass(frozen=True)
class Shape2:
    """Shape matrix in the reciprocal-diagonal form [[a, rho], [rho, 1/a]]."""

    a: float
    rho: float
    u: np.ndarray
    lambda_ratio: float

    def v0(self) -> np.ndarray:
        return np.array([[self.a, self.rho], [self.rho, 1.0 / self.a]])


def spatial_sign(x, center=None) -> np.ndarray:
    x = as_vector(x)
    c = np.zeros_like(x) if center is None else as_vector(center)
    if c.shape != x.shape:
        raise DomainError(f"dimension mismatch: {x.shape} vs {c.shape}")
    d = x - c
    big = float(np.abs(d).max())
    if big == 0.0:
        return np.zeros_like(d)
    d = d / big  # pre-scale so tiny or huge offsets keep unit norm
    return d / float(np.linalg.norm(d))


@njit(cache=True, nogil=True)
def _anchor_residual(x, k, tiny):
    # norm of the summed signs about data point k, and its multiplicity
    n, p = x.shape
    r = np.zeros(p)
    eta = 0
    for i in range(n):
        d2 = 0.0
        for j in range(p):
            t = x[i, j] - x[k, j]
            d2 += t * t
        d = math.sqrt(d2)
        if d <= tiny:
            eta += 1
            continue
        for j in range(p):
            r[j] += (x[i, j] - x[k, j]) / d
    return math.sqrt(np.sum(r * r)), eta


@njit(cache=True, nogil=True)
def _objective(x, y):
    acc = 0.0
    for i in range(x.shape[0]):
        d2 = 0.0
        for j in range(x.shape[1]):
            u = x[i, j] - y[j]
            d2 += u * u
        acc += math.sqrt(d2)
    return acc


@njit(cache=True, nogil=True)
def _hessian(x, y, tiny):
    n, p = x.shape
    h = np.zeros((p, p))
    u = np.empty(p)
    for i in range(n):
        d2 = 0.0
        for j in range(p):
            u[j] = x[i, j] - y[j]
            d2 += u[j] * u[j]
        d = math.sqrt(d2)
        if d <= tiny:
            continue
        for j in range(p):
            h[j, j] += 1.0 / d
            for k in range(p):
                h[j, k] -= u[j] * u[k] / (d2 * d)
    return h


@njit(cache=True, nogil=True)
def _weiszfeld(x, tol, max_iter):
    """Weiszfeld iteration with the Vardi-Zhang modification.

    Returns (median, iterations, residual, status); status 0 is converged,
    1 is iteration cap reached.
    """
    n, p = x.shape
    y = np.empty(p)
    spread = 0.0
    for j in range(p):
        y[j] = np.median(x[:, j])
        spread = max(spread, np.max(x[:, j]) - np.min(x[:, j]))
    if spread == 0.0 or n == 1:
        return x[0].copy(), 0, 0.0, 0
    tiny = 1e-14 * spread
    r = np.empty(p)
    t = np.empty(p)
    res = np.inf
    for it in range(max_iter + 1):
        r[:] = 0.0
        t[:] = 0.0
        w = 0.0
        eta = 0
        dmin = np.inf
        kmin = 0
        for i in range(n):
            d2 = 0.0
            for j in range(p):
                u = x[i, j] - y[j]
                d2 += u * u
            d = math.sqrt(d2)
            if d < dmin:
                dmin = d
                kmin = i
            if d <= tiny:
                eta += 1
                continue
            inv = 1.0 / d
            w += inv
            for j in range(p):
                r[j] += (x[i, j] - y[j]) * inv
                t[j] += x[i, j] * inv
        rn = math.sqrt(np.sum(r * r))
        if eta == 0:
            res = rn / n
        else:
            res = max(rn - eta, 0.0) / n
        if res <= tol:
            return y, it, res, 0
        if it == max_iter or w == 0.0:
            break
        if eta == 0 and 1.0 / dmin > 0.5 * w:
            # iterate is creeping towards a data point; test it directly
            rk, ek = _anchor_residual(x, kmin, tiny)
            if rk <= ek:
                return x[kmin].copy(), it, 0.0, 0
        for j in range(p):
            t[j] /= w
        if eta == 0:
            if it >= 8:
                # Newton step on the same pass's curvature, kept only if it
                # beats the Weiszfeld update; rescues slow linear convergence
                ok = True
                try:
                    yn = y + np.linalg.solve(_hessian(x, y, tiny), r)
                except Exception:
                    ok = False
                    yn = t
                if ok and _objective(x, yn) < _objective(x, t):
                    t[:] = yn
            for j in range(p):
                y[j] = t[j]
        else:
            g = min(1.0, eta / rn)
            for j in range(p):
                y[j] = (1.0 - g) * t[j] + g * y[j]
    return y, max_iter, res, 1


@njit(cache=True, nogil=True)
def _sscm_kernel(x, center):
    n, p = x.shape
    s = np.zeros((p, p))
    used = 0
    u = np.empty(p)
    for i in range(n):
        d2 = 0.0
        for j in range(p):
            u[j] = x[i, j] - center[j]
            d2 += u[j] * u[j]
        if d2 == 0.0:
            continue
        used += 1
        inv = 1.0 / d2
        for j in range(p):
            for k in range(j, p):
                s[j, k] += u[j] * u[k] * inv
    for j in range(p):
        for k in range(j, p):
            s[j, k] /= n
            s[k, j] = s[j, k]
    return s, used


def spatial_median(data, tol: float = MEDIAN_TOL, max_iter: int = MEDIAN_MAX_ITER) -> np.ndarray:
    """Minimiser of the summed Euclidean distances to the rows of ``data``.

    Started at the coordinate-wise median. Convergence is declared once the
    norm of the average spatial sign (corrected for an iterate sitting on a
    data point) is at most ``tol``.
    """
    x = as_data(data, min_n=1)
    mu, it, res, status = _weiszfeld(x, float(tol), int(max_iter))
    if status != 0:
        raise ConvergenceError(
            f"spatial median did not converge in {max_iter} iterations (residual {res:.3g})",
            last=mu, residual=res, iterations=it)
    return mu


def _median_with_iters(x, tol=MEDIAN_TOL, max_iter=MEDIAN_MAX_ITER):
    mu, it, res, status = _weiszfeld(x, tol, max_iter)
    if status != 0:
        raise ConvergenceError(
            f"spatial median did not converge in {max_iter} iterations (residual {res:.3g})",
            last=mu, residual=res, iterations=it)
    return mu, it


def sscm(data, center=None) -> np.ndarray:
    """Spatial sign covariance matrix about ``center`` (spatial median if None).

    Observations equal to the center contribute a zero sign but still count
    towards n, so the trace is the fraction of observations off the center.
    """
    x = as_data(data)
    if center is None:
        c = spatial_median(x)
    else:
        c = as_vector(center)
        if c.size != x.shape[1]:
            raise DomainError("center dimension does not match data")
    s, _ = _sscm_kernel(x, c)
    return s


@njit(cache=True, nogil=True)
def _corr_kernel(s11, s12, s22):
    # returns (rho, status); status 1 flags a zero-trace or collinear SSCM
    tr = s11 + s22
    if not tr > 0.0:
        return np.nan, 1
    s11 = s11 / tr
    s12 = s12 / tr
    e = s11 - 0.5
    r = math.hypot(e, s12)
    if 0.5 - r <= _COLLINEAR:
        return np.nan, 1
    if s12 == 0.0:
        return 0.0, 0
    d = 0.5 + r
    c = (2.0 * d - 1.0) / (d * (1.0 - d))
    # with t = b / s12 the estimate is c t / sqrt((1 + t^2)^2 + (c t)^2), which
    # is symmetric under t -> 1/t; evaluate on |t| <= 1 to avoid under/overflow.
    # b = d - s11 is written as s12^2 / (r + e) when s11 > 1/2 (no cancellation)
    if e > 0.0:
        t = s12 / (r + e)
    else:
        t = (r - e) / s12
    if abs(t) > 1.0:
        t = 1.0 / t
    ct = c * t
    rho = ct / math.sqrt((1.0 + t * t) ** 2 + ct * ct)
    return min(1.0, max(-1.0, rho)), 0


def sscm_to_corr(s) -> float:
    """Correlation of the shape matrix implied by a 2x2 SSCM.

    Closed-form evaluation of the eigen-route reconstruction. The matrix is
    first normalised to unit trace; ``s12 == 0`` gives 0 (diagonal shape).
    """
    m = _as_symmat(s)
    rho, status = _corr_kernel(m.s11, m.s12, m.s22)
    if status != 0:
        if not m.trace > 0.0:
            raise DegeneracyError("SSCM has zero trace")
        raise DegeneracyError("spatial signs are collinear")
    return float(rho)


def shape_from_sscm2(s) -> Shape2:
    """Reconstruct the shape (a, rho) of a bivariate elliptical model from its SSCM."""
    m = _as_symmat(s)
    eig = eig_sym2(m)
    d1, d2 = eig.lambda1, eig.lambda2
    if not d1 > 0.0 or d2 <= _COLLINEAR * d1:
        raise DegeneracyError("degenerate SSCM: spatial signs are collinear")
    l1, l2 = d1 / d2, d2 / d1
    u = eig.u
    v = u @ np.diag([l1, l2]) @ u.T
    a = math.sqrt(v[0, 0] / v[1, 1])
    rho = v[0, 1] / math.sqrt(v[0, 0] * v[1, 1])
    return Shape2(a=a, rho=min(1.0, max(-1.0, rho)), u=u, lambda_ratio=(d1 / d2) ** 2)


def spatial_sign_corr(data, center=None, tol: float = MEDIAN_TOL,
                      max_iter: int = MEDIAN_MAX_ITER) -> CorrEstimate:
    """Spatial sign correlation coefficient of bivariate data."""
    x = as_data(data, p=2)
    if center is None:
        c, iters = _median_with_iters(x, tol, max_iter)
    else:
        c, iters = as_vector(center), 0
        if c.size != 2:
            raise DomainError("center must be a 2-vector")
    s, used = _sscm_kernel(x, c)
    m = SymMat2(s[0, 0], s[0, 1], s[1, 1])
    rho = sscm_to_corr(m)
    shape = shape_from_sscm2(m)
    return CorrEstimate(
        "spatial_sign", rho, n_used=x.shape[0],
        diagnostics={"a_hat": shape.a, "iterations": iters, "n_off_center": used,
                     "sscm": (m.s11, m.s12, m.s22), "center": (float(c[0]), float(c[1]))})


def two_stage_spatial_sign_corr(data, scale: str = "qn") -> CorrEstimate:
    """Spatial sign correlation of margin-wise standardised data."""
    from .estimators.scale import mad, qn

    x = as_data(data, p=2)
    scale = scale.lower()
    if scale == "qn":
        sx, sy = qn(x[:, 0]), qn(x[:, 1])
    elif scale == "mad":
        sx, sy = mad(x[:, 0], scaled=True), mad(x[:, 1], scaled=True)
    else:
        raise DomainError(f"unknown scale estimator {scale!r}")
    if sx.degenerate or sy.degenerate:
        raise DegeneracyError("zero robust scale in a margin")
    est = spatial_sign_corr(x / np.array([sx.value, sy.value]))
    diag = dict(est.diagnostics, scale_method=scale, scale_x=sx.value, scale_y=sy.value)
    return replace(est, estimator_id="spatial_sign_2s", diagnostics=diag)


def sscorr_ci(estimate: CorrEstimate, n: int, level: float = 0.95,
              two_stage: bool = False) -> CorrEstimate:
    """Wald interval with the plug-in asymptotic variance, clipped to [-1, 1]."""
    from .asymptotics import asv_spatial_corr

    if not 0.0 < level < 1.0:
        raise DomainError("level must lie in (0, 1)")
    if n < 2:
        raise DomainError("n must be at least 2")
    rho = estimate.value
    a = 1.0 if two_stage else float(estimate.diagnostics.get("a_hat", 1.0))
    asv = asv_spatial_corr(max(-1.0, min(1.0, rho)), a, strict=False)
    half = std_normal_quantile(0.5 * (1.0 + level)) * math.sqrt(asv / n)
    return replace(estimate, ci_low=max(-1.0, rho - half), ci_high=min(1.0, rho + half))
