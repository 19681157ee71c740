"""Small numerical kernels: 2x2 symmetric eigenproblems, Kronecker
products, normal and chi-square quantiles, compensated summation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from numba import njit
from scipy import special

from .errors import DomainError

__all__ = [
    "SymMat2",
    "Eigen2",
    "eig_sym2",
    "kron2",
    "std_normal_cdf",
    "std_normal_quantile",
    "chi2_cdf",
    "chi2_quantile",
    "stable_sum",
]


@dataclass(frozen=True)
class SymMat2:
    """Symmetric 2x2 matrix stored by its three free entries."""

    s11: float
    s12: float
    s22: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.s11, self.s12, self.s22)):
            raise DomainError(f"non-finite entries in {self!r}")

    @classmethod
    def from_array(cls, m) -> "SymMat2":
        m = np.asarray(m, dtype=float)
        if m.shape != (2, 2):
            raise DomainError(f"expected a 2x2 matrix, got shape {m.shape}")
        return cls(float(m[0, 0]), 0.5 * float(m[0, 1] + m[1, 0]), float(m[1, 1]))

    def to_array(self) -> np.ndarray:
        return np.array([[self.s11, self.s12], [self.s12, self.s22]])

    @property
    def trace(self) -> float:
        return self.s11 + self.s22

    @property
    def det(self) -> float:
        return self.s11 * self.s22 - self.s12 * self.s12


def _as_symmat(m) -> SymMat2:
    return m if isinstance(m, SymMat2) else SymMat2.from_array(m)


class Eigen2(NamedTuple):
    lambda1: float
    lambda2: float
    u: np.ndarray  # columns are eigenvectors, matching (lambda1, lambda2)


def _sign_fix(v0: float, v1: float) -> tuple[float, float]:
    # first nonzero component positive
    if v0 < 0.0 or (v0 == 0.0 and v1 < 0.0):
        return -v0, -v1
    return v0, v1


def eig_sym2(m) -> Eigen2:
    """Closed-form eigendecomposition of a symmetric 2x2 matrix.

    Eigenvalues are returned in decreasing order. Each eigenvector has its
    first nonzero component positive. If the eigengap is below
    ``1e-14 * max(|lambda1|, 1)`` the eigenvalues are treated as equal and
    ``U = I`` is returned.
    """
    s = _as_symmat(m)
    half_tr = 0.5 * (s.s11 + s.s22)
    half_diff = 0.5 * (s.s11 - s.s22)
    r = math.hypot(half_diff, s.s12)
    l1, l2 = half_tr + r, half_tr - r
    if l1 - l2 < 1e-14 * max(abs(l1), 1.0):
        return Eigen2(l1, l2, np.eye(2))
    if s.s12 == 0.0:
        # diagonal input: eigenvalues are the entries themselves
        if s.s11 >= s.s22:
            return Eigen2(s.s11, s.s22, np.eye(2))
        return Eigen2(s.s22, s.s11, np.array([[0.0, 1.0], [1.0, 0.0]]))
    # pick the better conditioned of the two equivalent eigenvector formulas
    if half_diff >= 0.0:
        v0, v1 = half_diff + r, s.s12
    else:
        v0, v1 = s.s12, r - half_diff
    nrm = math.hypot(v0, v1)
    c, sn = _sign_fix(v0 / nrm, v1 / nrm)
    w0, w1 = _sign_fix(-sn, c)
    return Eigen2(l1, l2, np.array([[c, w0], [sn, w1]]))


def kron2(a, b) -> np.ndarray:
    """Kronecker product of two 2x2 matrices (block (i, j) is ``a[i, j] * b``)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != (2, 2) or b.shape != (2, 2):
        raise DomainError("kron2 expects two 2x2 matrices")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise DomainError("kron2 got non-finite input")
    return np.kron(a, b)


# Rational approximation of the normal quantile (P. J. Acklam), relative
# error about 1.15e-9; one Halley step brings it to working precision.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425
_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


@njit(cache=True, nogil=True)
def _ndtri1(p):
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    elif p > 1.0 - _P_LOW:
        q = math.sqrt(-2.0 * math.log1p(-p))
        x = -(((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    else:
        q = p - 0.5
        r = q * q
        x = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / (
            ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    # Halley refinement; the upper tail works with the complement to keep
    # relative accuracy
    if p > 0.5:
        e = -(p - 1.0 + 0.5 * math.erfc(x / _SQRT2))
    else:
        e = 0.5 * math.erfc(-x / _SQRT2) - p
    u = e * _SQRT2PI * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


@njit(cache=True, nogil=True)
def _ndtri_flat(p, out):
    for i in range(p.shape[0]):
        out[i] = _ndtri1(p[i])


def std_normal_cdf(x):
    x = np.asarray(x, dtype=float)
    out = 0.5 * special.erfc(-x / math.sqrt(2.0))
    return float(out) if out.ndim == 0 else out


def std_normal_quantile(p):
    """Standard normal quantile function, scalar or elementwise on arrays."""
    arr = np.asarray(p, dtype=float)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise DomainError("std_normal_quantile requires 0 < p < 1")
    flat = np.ascontiguousarray(arr).ravel()
    out = np.empty_like(flat)
    _ndtri_flat(flat, out)
    x = out.reshape(arr.shape)
    return float(x) if arr.ndim == 0 else x


def chi2_cdf(x: float, df: int) -> float:
    if df <= 0:
        raise DomainError("df must be positive")
    if x <= 0.0:
        return 0.0
    if df == 2:
        return -math.expm1(-0.5 * x)
    return float(special.gammainc(0.5 * df, 0.5 * x))


def chi2_quantile(p: float, df: int) -> float:
    """Chi-square quantile; exact for two degrees of freedom."""
    if not (0.0 < p < 1.0) or not math.isfinite(p):
        raise DomainError("chi2_quantile requires 0 < p < 1")
    if int(df) != df or df <= 0:
        raise DomainError("df must be a positive integer")
    if df == 2:
        return -2.0 * math.log1p(-p)
    return 2.0 * float(special.gammaincinv(0.5 * df, p))


def stable_sum(values: Sequence[float]) -> float:
    """Exactly rounded sum of ``values`` (math.fsum); empty input gives 0."""
    return math.fsum(values)
