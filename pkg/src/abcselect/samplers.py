"""Random-variate generation for every distribution the engine simulates.

All samplers are pure functions of their parameters and a seed (either a
:class:`~abcselect.seeding.SeedSpec` or an existing numpy Generator), safe to
call concurrently. Invalid parameter domains raise rather than clamp.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import ParameterDomainError
from .seeding import SeedSpec

__all__ = [
    "StableParams",
    "GandKParams",
    "sample_stable",
    "gandk_quantile",
    "sample_gandk",
    "sample_normal",
    "sample_exponential",
    "sample_gamma",
    "sample_lognormal",
    "sample_uniform",
    "sample_discrete_uniform",
]


def _as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, SeedSpec):
        return seed.generator()
    raise TypeError(f"seed must be a SeedSpec or numpy Generator, got {type(seed)!r}")


def _check_count(n: int) -> int:
    n = int(n)
    if n < 1:
        raise ParameterDomainError(f"sample count must be >= 1, got {n}")
    return n


@dataclass(frozen=True)
class StableParams:
    """Symmetric zero-centered stable law with characteristic function
    exp(-|gamma*t|**alpha)."""

    alpha: float
    gamma: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 2.0:
            raise ParameterDomainError(f"alpha must be in (0, 2], got {self.alpha}")
        if not self.gamma > 0.0:
            raise ParameterDomainError(f"gamma must be > 0, got {self.gamma}")


@dataclass(frozen=True)
class GandKParams:
    """g-and-k quantile-distribution parameters; c defaults to 0.8."""

    a: float = 0.0
    b: float = 1.0
    g: float = 0.0
    k: float = 0.0
    c: float = 0.8

    def __post_init__(self):
        if not self.b > 0.0:
            raise ParameterDomainError(f"b must be > 0, got {self.b}")
        if not self.k > -0.5:
            raise ParameterDomainError(f"k must be > -0.5, got {self.k}")


def sample_stable(params: StableParams, n: int, seed) -> np.ndarray:
    """Draw n variates from the symmetric stable law S(alpha, gamma).

    Uses the Chambers-Mallows-Stuck construction specialized to the
    symmetric case: with U ~ Uniform(-pi/2, pi/2) and W ~ Exp(1),

        X = sin(alpha*U) / cos(U)**(1/alpha)
            * (cos((1-alpha)*U) / W)**((1-alpha)/alpha)

    has characteristic function exp(-|t|**alpha); the alpha=1 branch is
    X = tan(U) (standard Cauchy). Output is gamma * X.
    """
    n = _check_count(n)
    gen = _as_generator(seed)
    u = gen.uniform(-np.pi / 2.0, np.pi / 2.0, size=n)
    w = gen.standard_exponential(size=n)
    alpha = params.alpha
    if alpha == 1.0:
        x = np.tan(u)
    else:
        x = (np.sin(alpha * u) / np.cos(u) ** (1.0 / alpha)) * (
            np.cos((1.0 - alpha) * u) / w
        ) ** ((1.0 - alpha) / alpha)
    return params.gamma * x


def gandk_quantile(p, params: GandKParams):
    """Quantile function of the g-and-k distribution.

    Q(p) = a + b * (1 + c*(1 - e**(-g*z)) / (1 + e**(-g*z)))
             * (1 + z**2)**k * z,     z = standard normal quantile of p.

    Accepts a scalar or array of probabilities in the open interval (0, 1).
    """
    p_arr = np.asarray(p, dtype=float)
    if np.any(p_arr <= 0.0) or np.any(p_arr >= 1.0):
        raise ParameterDomainError("quantile levels must lie strictly in (0, 1)")
    z = ndtri(p_arr)
    return _gandk_from_z(z, params)


def _gandk_from_z(z, params: GandKParams):
    eg = np.exp(-params.g * z)
    skew = 1.0 + params.c * (1.0 - eg) / (1.0 + eg)
    out = params.a + params.b * skew * (1.0 + z * z) ** params.k * z
    if np.ndim(out) == 0:
        return float(out)
    return out


def sample_gandk(params: GandKParams, n: int, seed) -> np.ndarray:
    """Inverse-CDF sampling: gandk_quantile applied to uniform variates."""
    n = _check_count(n)
    gen = _as_generator(seed)
    # Dyadic midpoints keep p strictly inside (0,1); endpoints would send
    # the normal quantile to +-inf.
    u = (gen.integers(0, 1 << 53, size=n).astype(np.float64) + 0.5) / float(1 << 53)
    return _gandk_from_z(ndtri(u), params)


def sample_normal(mu: float, sigma2: float, n: int, seed) -> np.ndarray:
    """Normal with mean mu and variance sigma2."""
    if not sigma2 > 0.0:
        raise ParameterDomainError(f"variance must be > 0, got {sigma2}")
    return _as_generator(seed).normal(mu, math.sqrt(sigma2), size=_check_count(n))


def sample_exponential(rate: float, n: int, seed) -> np.ndarray:
    if not rate > 0.0:
        raise ParameterDomainError(f"rate must be > 0, got {rate}")
    return _as_generator(seed).exponential(1.0 / rate, size=_check_count(n))


def sample_gamma(shape: float, rate: float, n: int, seed) -> np.ndarray:
    """Gamma with shape and *rate* (not scale) parameters."""
    if not (shape > 0.0 and rate > 0.0):
        raise ParameterDomainError(f"shape and rate must be > 0, got {shape}, {rate}")
    return _as_generator(seed).gamma(shape, 1.0 / rate, size=_check_count(n))


def sample_lognormal(mu: float, sigma2: float, n: int, seed) -> np.ndarray:
    """Lognormal: log of the variate is Normal(mu, sigma2)."""
    if not sigma2 > 0.0:
        raise ParameterDomainError(f"variance must be > 0, got {sigma2}")
    return _as_generator(seed).lognormal(mu, math.sqrt(sigma2), size=_check_count(n))


def sample_uniform(lo: float, hi: float, n: int, seed) -> np.ndarray:
    if not lo < hi:
        raise ParameterDomainError(f"need lo < hi, got [{lo}, {hi}]")
    return _as_generator(seed).uniform(lo, hi, size=_check_count(n))


def sample_discrete_uniform(n_categories: int, n: int, seed) -> np.ndarray:
    """Uniform draws from {0, ..., n_categories - 1}."""
    if int(n_categories) < 1:
        raise ParameterDomainError(f"need >= 1 category, got {n_categories}")
    return _as_generator(seed).integers(0, int(n_categories), size=_check_count(n))
