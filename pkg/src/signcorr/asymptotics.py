"""Closed-form asymptotics of the SSCM and the spatial sign correlation
at bivariate elliptical distributions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .numerics import eig_sym2, kron2

__all__ = [
    "EllipticalShapeParams",
    "delta_from_lambda",
    "population_sscm",
    "ws_matrix",
    "asv_spatial_corr",
    "asv_two_stage",
    "asv_pearson",
    "are_spatial",
    "g_matrix",
    "wv0_matrix",
    "if_sscm",
    "if_spatial_corr",
    "ges_spatial_corr",
    "ges_spatial_corr_closed",
]

W0 = np.array([
    [1.0, 0.0, 0.0, -1.0],
    [0.0, 1.0, 1.0, 0.0],
    [0.0, 1.0, 1.0, 0.0],
    [-1.0, 0.0, 0.0, 1.0],
])

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class EllipticalShapeParams:
    a: float
    rho: float
    kappa: float = 0.0  # marginal excess kurtosis, nan when undefined

    def __post_init__(self):
        _check_shape(self.a, self.rho)


def _check_shape(a, rho, strict=True):
    if not a > 0.0 or not math.isfinite(a):
        raise DomainError(f"a must be positive, got {a}")
    if strict and not abs(rho) < 1.0:
        raise DomainError(f"|rho| must be < 1, got {rho}")
    if not strict and not abs(rho) <= 1.0:
        raise DomainError(f"|rho| must be <= 1, got {rho}")


def v0_matrix(a: float, rho: float) -> np.ndarray:
    _check_shape(a, rho)
    return np.array([[a, rho], [rho, 1.0 / a]])


def delta_from_lambda(lambda1: float, lambda2: float) -> tuple[float, float]:
    """SSCM eigenvalues of a bivariate elliptical law with shape eigenvalues (lambda1, lambda2)."""
    if not (lambda1 > 0.0 and lambda2 > 0.0):
        raise DomainError("eigenvalues must be positive")
    r1, r2 = math.sqrt(lambda1), math.sqrt(lambda2)
    d1 = r1 / (r1 + r2)
    return d1, 1.0 - d1


def population_sscm(v) -> np.ndarray:
    """Population SSCM of any bivariate elliptical law with shape matrix ``v``."""
    eig = eig_sym2(v)
    d1, d2 = delta_from_lambda(eig.lambda1, eig.lambda2)
    return eig.u @ np.diag([d1, d2]) @ eig.u.T


def _ws_factor(l1: float, l2: float) -> float:
    # (-l1 l2 + g (l1 + l2) / 2) / (l1 - l2)^2 with g = sqrt(l1 l2) factors as
    # g (r1 - r2)^2 / 2 over (r1 - r2)^2 (r1 + r2)^2, r = sqrt(l); the cancelled
    # form is exact at l1 = l2 (value 1/8) and free of rounding blow-up near it
    r1, r2 = math.sqrt(l1), math.sqrt(l2)
    return 0.5 * r1 * r2 / (r1 + r2) ** 2


def ws_matrix(lambda1: float, lambda2: float, u=None) -> np.ndarray:
    """Asymptotic covariance of vec(SSCM) (4x4) for shape eigenpairs (lambda, U)."""
    if not (lambda1 > 0.0 and lambda2 > 0.0):
        raise DomainError("eigenvalues must be positive")
    u = np.eye(2) if u is None else np.asarray(u, dtype=float)
    k = kron2(u, u)
    return _ws_factor(lambda1, lambda2) * (k @ W0 @ k.T)


def asv_spatial_corr(rho: float, a: float = 1.0, strict: bool = True) -> float:
    _check_shape(a, rho, strict)
    t = 1.0 - rho * rho
    return t * t + 0.5 * (a + 1.0 / a) * t ** 1.5


def asv_two_stage(rho: float) -> float:
    return asv_spatial_corr(rho, 1.0)


def asv_pearson(rho: float, kappa: float = 0.0) -> float:
    if not abs(rho) < 1.0:
        raise DomainError(f"|rho| must be < 1, got {rho}")
    if math.isnan(kappa):
        return math.nan
    if not kappa > -2.0:
        raise DomainError("excess kurtosis must exceed -2")
    return (1.0 + kappa / 3.0) * (1.0 - rho * rho) ** 2


def are_spatial(rho: float, a: float = 1.0, kappa: float = 0.0) -> float:
    """Efficiency of the spatial sign correlation relative to Pearson.

    Returns nan when the margins have no fourth moment (kappa is nan).
    """
    _check_shape(a, rho)
    if math.isnan(kappa):
        return math.nan
    if not kappa > -2.0:
        raise DomainError("excess kurtosis must exceed -2")
    return (1.0 + kappa / 3.0) / (1.0 + 0.5 * (a + 1.0 / a) / math.sqrt(1.0 - rho * rho))


def g_matrix(a: float, rho: float) -> np.ndarray:
    """Derivative (2x4) of (s11, s12) -> (v0_11, v0_12), acting on vec(S)."""
    _check_shape(a, rho)
    a2 = a * a
    r2 = rho * rho
    q = math.sqrt(1.0 - r2)
    k = (a2 + 1.0) * q + 2.0 * a * (1.0 - r2)
    f = k / (q * (4.0 * a2 * r2 + (a2 - 1.0) ** 2))
    g11 = (a2 - 1.0) ** 2 * q + 2.0 * a * (a2 + 1.0) * r2
    g12 = (a2 - 1.0) * rho * (2.0 * a * q - a2 - 1.0)
    g21 = (a2 - 1.0) * rho * ((a2 + 1.0) * q - 2.0 * a * (1.0 - r2)) / a
    g22 = 2.0 * (a2 + 1.0) * r2 * q + (a2 - 1.0) ** 2 * (1.0 - r2) / a
    return f * np.array([[g11, g12, 0.0, 0.0], [g21, g22, 0.0, 0.0]])


def wv0_matrix(a: float, rho: float) -> np.ndarray:
    """Asymptotic covariance (2x2) of the reciprocal-diagonal shape estimate (a_hat, rho_hat)."""
    eig = eig_sym2(v0_matrix(a, rho))
    ws = ws_matrix(eig.lambda1, eig.lambda2, eig.u)
    if a == 1.0 and rho == 0.0:
        # G is 0/0 at the spherical point; its limit is diag(4, 4) on (s11, s21)
        g = np.array([[4.0, 0.0, 0.0, 0.0], [0.0, 4.0, 0.0, 0.0]])
    else:
        g = g_matrix(a, rho)
    w = g @ ws @ g.T
    return 0.5 * (w + w.T)


def if_sscm(x, s) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    nrm2 = float(x @ x)
    if nrm2 == 0.0:
        raise DomainError("influence function undefined at the origin")
    return np.outer(x, x) / nrm2 - np.asarray(s, dtype=float)


def if_spatial_corr(x, a: float, rho: float) -> float:
    """Influence function of the spatial sign correlation at contamination point x."""
    _check_shape(a, rho)
    x1, x2 = float(x[0]), float(x[1])
    if x1 == 0.0 and x2 == 0.0:
        raise DomainError("influence function undefined at the origin")
    a2 = a * a
    r2 = rho * rho
    q = math.sqrt(1.0 - r2)
    t1 = ((a2 + 1.0) * rho * q + 2.0 * a * rho * (1.0 - r2)) * (a2 * x2 * x2 + x1 * x1)
    t2 = ((a2 * a2 + 6.0 * a2 + 1.0) * (r2 - 1.0) + 2.0 * a * (a2 + 1.0) * q * (r2 - 2.0)) * x1 * x2
    den = (2.0 * a2 * q + a * (a2 + 1.0)) * (x1 * x1 + x2 * x2)
    return (-t1 - t2) / den


def ges_spatial_corr_closed(rho: float) -> float:
    """Gross-error sensitivity for equal marginal scales (a = 1)."""
    if not abs(rho) < 1.0:
        raise DomainError(f"|rho| must be < 1, got {rho}")
    r2 = rho * rho
    q = math.sqrt(1.0 - r2)
    inner = (r2 - 1.0) * (-r2 * r2 + 8.0 * r2 + 4.0 * q * (r2 - 2.0) - 8.0)
    return (math.sqrt(inner) + abs(rho) * (q - r2 + 1.0)) / (q + 1.0)


def _abs_if_theta(theta, a, rho):
    return abs(if_spatial_corr((math.cos(theta), math.sin(theta)), a, rho))


def ges_spatial_corr_numeric(a: float, rho: float, grid: int = 720, tol: float = 1e-13) -> float:
    """Maximise |IF| over directions: grid bracketing then golden-section search."""
    _check_shape(a, rho)
    thetas = np.arange(grid) * (math.pi / grid)
    vals = [_abs_if_theta(t, a, rho) for t in thetas]
    k = int(np.argmax(vals))
    step = math.pi / grid
    lo, hi = thetas[k] - step, thetas[k] + step
    c = hi - _GOLDEN * (hi - lo)
    d = lo + _GOLDEN * (hi - lo)
    fc, fd = _abs_if_theta(c, a, rho), _abs_if_theta(d, a, rho)
    while hi - lo > tol:
        if fc > fd:
            hi, d, fd = d, c, fc
            c = hi - _GOLDEN * (hi - lo)
            fc = _abs_if_theta(c, a, rho)
        else:
            lo, c, fc = c, d, fd
            d = lo + _GOLDEN * (hi - lo)
            fd = _abs_if_theta(d, a, rho)
    return max(fc, fd, vals[k])


def ges_spatial_corr(a: float, rho: float) -> float:
    """Gross-error sensitivity: closed form at a = 1, numerical otherwise."""
    _check_shape(a, rho)
    if a == 1.0:
        return ges_spatial_corr_closed(rho)
    return ges_spatial_corr_numeric(a, rho)
