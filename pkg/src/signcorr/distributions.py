"""Reproducible samplers for the bivariate data models and contamination
mechanisms used in the simulations.

Every variate is produced by inversion from exactly one uniform, so the
number of uniforms consumed per observation is fixed and streams stay
aligned across parameter values.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import DomainError
from .numerics import SymMat2, std_normal_quantile

__all__ = [
    "SeedSpec",
    "as_generator",
    "stream_ids",
    "EllipticalSpec",
    "sigma_from_rho",
    "sample_normal2",
    "sample_t2",
    "sample_powerexp2",
    "sample_skewed_exp",
    "skewed_exp_alpha",
    "contaminate_shift",
    "contaminate_replace",
    "powerexp_radial_moment",
]

_M64 = (1 << 64) - 1
_TOP = 1 << 63


def _mix(z: int) -> int:
    # splitmix64 finaliser, a bijection on 64-bit integers
    z = (z + 0x9E3779B97F4A7C15) & _M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


def _encode(component) -> int:
    # ints occupy [0, 2^63), strings the upper half
    if isinstance(component, (bool, np.bool_)):
        raise DomainError("boolean seed path components are not allowed")
    if isinstance(component, (int, np.integer)):
        c = int(component)
        if not 0 <= c < _TOP:
            raise DomainError(f"integer path component out of range: {c}")
        return c
    if isinstance(component, str):
        h = int.from_bytes(hashlib.blake2b(component.encode(), digest_size=8).digest(), "little")
        return h | _TOP
    raise DomainError(f"unsupported seed path component {component!r}")


@dataclass(frozen=True)
class SeedSpec:
    """Master seed plus a derivation path naming one independent stream.

    The 64-bit ``stream_id`` is a chained splitmix64 hash of the path; for a
    fixed prefix, distinct final components always give distinct ids. The
    stream itself is a Philox counter-based generator keyed by the id, so
    no generator state is shared between paths.
    """

    master: int
    path: tuple = field(default=())

    def __post_init__(self):
        if not 0 <= int(self.master) <= _M64:
            raise DomainError("master seed must be a 64-bit unsigned integer")
        for c in self.path:
            _encode(c)

    def child(self, *components) -> "SeedSpec":
        return SeedSpec(self.master, tuple(self.path) + tuple(components))

    @property
    def stream_id(self) -> int:
        h = _mix(int(self.master) ^ 0x5851F42D4C957F2D)
        for c in self.path:
            h = _mix(h ^ _encode(c))
        return h

    def key(self) -> int:
        sid = self.stream_id
        return sid | (_mix(sid ^ 0xD1B54A32D192ED03) << 64)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=self.key()))

    def to_json(self) -> dict:
        return {"master": int(self.master), "path": list(self.path)}


def _mix_np(z: np.ndarray) -> np.ndarray:
    z = z + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def stream_ids(prefix: SeedSpec, *components: np.ndarray) -> np.ndarray:
    """Vectorised ``prefix.child(c1[i], c2[i], ...).stream_id`` for integer arrays."""
    with np.errstate(over="ignore"):
        h = np.uint64(prefix.stream_id)
        arrays = np.broadcast_arrays(*[np.asarray(c, dtype=np.uint64) for c in components])
        out = np.full(arrays[0].shape, h, dtype=np.uint64)
        for c in arrays:
            out = _mix_np(out ^ c)
    return out


def as_generator(seed) -> np.random.Generator:
    """Accepts a SeedSpec, a non-negative int or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, SeedSpec):
        return seed.generator()
    if seed is None:
        return SeedSpec(0).generator()
    if isinstance(seed, (int, np.integer)):
        return SeedSpec(int(seed)).generator()
    raise DomainError(f"cannot build a generator from {seed!r}")


def _uniform(gen: np.random.Generator, size) -> np.ndarray:
    # multiples of 2^-53 shifted by half a step: strictly inside (0, 1)
    return gen.random(size) + 2.0 ** -54


def _chol(sigma) -> np.ndarray:
    s = sigma.to_array() if isinstance(sigma, SymMat2) else np.asarray(sigma, dtype=float)
    try:
        return np.linalg.cholesky(s)
    except np.linalg.LinAlgError as exc:
        raise DomainError("sigma must be positive definite") from exc


def _apply_chol(z0, z1, sigma) -> np.ndarray:
    # written out elementwise so a stack of samples transforms exactly like
    # each sample on its own
    L = _chol(sigma)
    return np.stack((L[0, 0] * z0, L[1, 0] * z0 + L[1, 1] * z1), axis=-1)


def sigma_from_rho(rho: float, var1: float = 1.0, var2: float = 1.0) -> SymMat2:
    if not abs(rho) < 1.0:
        raise DomainError("|rho| must be < 1")
    if not (var1 > 0.0 and var2 > 0.0):
        raise DomainError("variances must be positive")
    return SymMat2(var1, rho * math.sqrt(var1 * var2), var2)


# Each model consumes a fixed number of uniforms per observation (the last
# axis below) and maps them elementwise to an observation. Leading axes are
# free, which lets the simulation transform many samples in one call.

def _tf_normal(u, sigma):
    z = std_normal_quantile(u)
    return _apply_chol(z[..., 0], z[..., 1], sigma)


def _tf_t(u, sigma, nu):
    z = std_normal_quantile(u[..., :2])
    w = 2.0 * special.gammaincinv(0.5 * nu, u[..., 2])
    k = 1.0 / np.sqrt(w / nu)
    return _apply_chol(z[..., 0] * k, z[..., 1] * k, sigma)


def _tf_powerexp(u, sigma, alpha):
    theta = 2.0 * math.pi * u[..., 0]
    r = (2.0 * special.gammaincinv(1.0 / alpha, u[..., 1])) ** (0.5 / alpha)
    return _apply_chol(r * np.cos(theta), r * np.sin(theta), sigma)


def _tf_skewed(u, rho):
    a = skewed_exp_alpha(rho)
    z = -np.log1p(-u)
    return np.stack((a * z[..., 0] + z[..., 1], z[..., 0] + a * z[..., 1]), axis=-1)


UNIFORMS_PER_OBS = {"normal": 2, "t": 3, "powerexp": 2, "skewed": 2}


def uniforms(seed, n: int, kind: str) -> np.ndarray:
    """The (n, k) block of uniforms a sampler of ``kind`` consumes."""
    return _uniform(as_generator(seed), (n, UNIFORMS_PER_OBS[kind]))


def transform(u, kind: str, sigma=None, param=None, rho=None) -> np.ndarray:
    if kind == "normal":
        return _tf_normal(u, sigma)
    if kind == "t":
        return _tf_t(u, sigma, param)
    if kind == "powerexp":
        return _tf_powerexp(u, sigma, param)
    if kind == "skewed":
        return _tf_skewed(u, rho)
    raise DomainError(f"unknown sampler {kind!r}")


def sample_normal2(sigma, n: int, seed) -> np.ndarray:
    _chol(sigma)
    return _tf_normal(uniforms(seed, n, "normal"), sigma)


def sample_t2(sigma, nu: float, n: int, seed) -> np.ndarray:
    """Elliptical t_nu: L Z / sqrt(W / nu), W ~ chi^2_nu."""
    if not nu > 0.0:
        raise DomainError("nu must be positive")
    _chol(sigma)
    return _tf_t(uniforms(seed, n, "t"), sigma, nu)


def sample_powerexp2(sigma, alpha: float, n: int, seed) -> np.ndarray:
    """Elliptical power exponential with generator g(t) = exp(-t^alpha / 2).

    The squared Mahalanobis radius T satisfies T^alpha ~ Gamma(1/alpha, scale 2)
    in two dimensions, so R = G^(1/(2 alpha)) with G drawn from that gamma law.
    alpha = 1 gives the normal, alpha = 0.5 the elliptical Laplace law.
    """
    if not alpha > 0.0:
        raise DomainError("alpha must be positive")
    _chol(sigma)
    return _tf_powerexp(uniforms(seed, n, "powerexp"), sigma, alpha)


def powerexp_radial_moment(alpha: float, k: float) -> float:
    """E R^k for the power exponential radius in two dimensions."""
    return math.exp((k / (2.0 * alpha)) * math.log(2.0)
                    + math.lgamma(1.0 / alpha + k / (2.0 * alpha)) - math.lgamma(1.0 / alpha))


def skewed_exp_alpha(rho: float) -> float:
    if not 0.0 <= rho < 1.0:
        raise DomainError("rho must lie in [0, 1)")
    # (1 - sqrt(1 - rho^2)) / rho without the cancellation at small rho
    return rho / (1.0 + math.sqrt(1.0 - rho * rho))


def sample_skewed_exp(rho: float, n: int, seed) -> np.ndarray:
    """X = a Z1 + Z2, Y = Z1 + a Z2 with Z1, Z2 iid Exp(1); corr(X, Y) = rho."""
    skewed_exp_alpha(rho)
    return _tf_skewed(uniforms(seed, n, "skewed"), rho)


@dataclass(frozen=True)
class EllipticalSpec:
    sigma: SymMat2
    family: str = "normal"  # normal | t | powerexp
    param: float | None = None

    def __post_init__(self):
        _chol(self.sigma)
        if self.family not in ("normal", "t", "powerexp"):
            raise DomainError(f"unknown family {self.family!r}")
        if self.family != "normal" and not (self.param is not None and self.param > 0.0):
            raise DomainError(f"{self.family} needs a positive parameter")

    def sample(self, n: int, seed) -> np.ndarray:
        if self.family == "normal":
            return sample_normal2(self.sigma, n, seed)
        if self.family == "t":
            return sample_t2(self.sigma, self.param, n, seed)
        return sample_powerexp2(self.sigma, self.param, n, seed)


def contaminate_shift(data, h: float) -> np.ndarray:
    """Copy of ``data`` with the first observation moved by h along the x-axis."""
    x = np.array(data, dtype=float, copy=True)
    if x.shape[0] < 1:
        raise DomainError("need at least one observation")
    x[0, 0] += h
    return x


def contaminate_replace(data, m: int, contam_sigma, seed) -> np.ndarray:
    """Replace the first m rows by N(0, contam_sigma) draws.

    All n replacement rows are always drawn, so for a fixed seed the result
    for m and m + 1 differs in exactly one row.
    """
    x = np.array(data, dtype=float, copy=True)
    n = x.shape[0]
    if not 0 <= m <= n:
        raise DomainError(f"m must lie in [0, {n}]")
    repl = sample_normal2(contam_sigma, n, seed)
    x[:m] = repl[:m]
    return x
