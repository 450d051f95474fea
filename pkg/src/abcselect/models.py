"""Candidate models: (prior sampler, forward simulator, summary map) triples.

Every callable here is a small frozen dataclass rather than a closure so that
model specs can cross process boundaries when draws run in parallel workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import ndtri

from .errors import ParameterDomainError
from .samplers import GandKParams, _gandk_from_z

__all__ = [
    "ModelSpec",
    "normal_mean_models",
    "expo_family_models",
    "gandk_models",
    "NORMAL_KNOWN_DEFAULTS",
    "EXPO_TRUE_PARAMS",
    "GANDK_TRUE_PARAMS",
]


@dataclass(frozen=True)
class ModelSpec:
    """One candidate model for the selection problem.

    ``prior(gen) -> theta``, ``simulate(theta, shape, gen) -> dataset`` and
    ``summary(dataset) -> eta`` must be deterministic given their generator.
    ``index`` is the 0-based position within the study's model list.
    """

    index: int
    label: str
    param_names: tuple
    prior: Callable
    simulate: Callable
    summary: Optional[Callable] = None


# --------------------------------------------------------------------------
# priors


@dataclass(frozen=True)
class _PointPrior:
    values: tuple = ()

    def __call__(self, gen):
        return np.array(self.values, dtype=float)


@dataclass(frozen=True)
class _GaussianPrior:
    mean: float
    var: float

    def __call__(self, gen):
        return np.array([gen.normal(self.mean, math.sqrt(self.var))])


@dataclass(frozen=True)
class _ExponentialPrior:
    rate: float = 1.0

    def __call__(self, gen):
        return np.array([gen.exponential(1.0 / self.rate)])


@dataclass(frozen=True)
class _UniformPrior:
    bounds: tuple  # ((lo, hi), ...) one pair per parameter

    def __call__(self, gen):
        return np.array([gen.uniform(lo, hi) for lo, hi in self.bounds])


@dataclass(frozen=True)
class _NormalVariancePrior:
    """sigma^2 ~ Gamma(a, b) (rate b), optionally on the precision instead;
    the alternative model appends mu | sigma^2 ~ N(mu_tilde, c * sigma^2)."""

    a: float
    b: float
    on: str = "variance"  # or "precision"
    mu_tilde: Optional[float] = None
    c: Optional[float] = None

    def __call__(self, gen):
        g = gen.gamma(self.a, 1.0 / self.b)
        sigma2 = 1.0 / g if self.on == "precision" else g
        if self.mu_tilde is None:
            return np.array([sigma2])
        mu = gen.normal(self.mu_tilde, math.sqrt(self.c * sigma2))
        return np.array([mu, sigma2])


# --------------------------------------------------------------------------
# simulators (theta, n, gen) -> 1-d dataset


@dataclass(frozen=True)
class _NormalSimulator:
    """Normal data; mean from theta unless fixed, variance from theta unless fixed."""

    fixed_mu: Optional[float] = None
    fixed_sigma2: Optional[float] = None

    def __call__(self, theta, n, gen):
        i = 0
        if self.fixed_mu is None:
            mu = theta[i]
            i += 1
        else:
            mu = self.fixed_mu
        sigma2 = theta[i] if self.fixed_sigma2 is None else self.fixed_sigma2
        return gen.normal(mu, math.sqrt(sigma2), size=n)


@dataclass(frozen=True)
class _ExponentialSimulator:
    def __call__(self, theta, n, gen):
        return gen.exponential(1.0 / theta[0], size=n)


@dataclass(frozen=True)
class _LognormalSimulator:
    sigma2: float = 1.0

    def __call__(self, theta, n, gen):
        return gen.lognormal(theta[0], math.sqrt(self.sigma2), size=n)


@dataclass(frozen=True)
class _GammaSimulator:
    shape: float = 2.0

    def __call__(self, theta, n, gen):
        return gen.gamma(self.shape, 1.0 / theta[0], size=n)


@dataclass(frozen=True)
class _GandKSimulator:
    """g-and-k by inverse-CDF; theta is (k,) with g fixed, or (g, k)."""

    a: float = 0.0
    b: float = 1.0
    c: float = 0.8
    fixed_g: Optional[float] = None

    def __call__(self, theta, n, gen):
        if self.fixed_g is None:
            g, k = float(theta[0]), float(theta[1])
        else:
            g, k = self.fixed_g, float(theta[0])
        params = GandKParams(a=self.a, b=self.b, g=g, k=k, c=self.c)
        u = (gen.integers(0, 1 << 53, size=n).astype(np.float64) + 0.5) / float(1 << 53)
        return _gandk_from_z(ndtri(u), params)


# --------------------------------------------------------------------------
# summary maps


@dataclass(frozen=True)
class _MeanSummary:
    def __call__(self, data):
        return np.array([np.mean(data)])


@dataclass(frozen=True)
class _MeanVarSummary:
    def __call__(self, data):
        return np.array([np.mean(data), np.var(data, ddof=1)])


@dataclass(frozen=True)
class _SufficientExpoSummary:
    """(sum y, sum log y, sum log^2 y): sufficient within and across the three
    exponential-family candidates."""

    def __call__(self, data):
        ly = np.log(data)
        return np.array([np.sum(data), np.sum(ly), np.sum(ly * ly)])


@dataclass(frozen=True)
class _QuantilePairSummary:
    levels: tuple = (0.1, 0.9)

    def __call__(self, data):
        # linear interpolation between order statistics (type-7 rule),
        # the single quantile definition used across the package
        return np.quantile(np.asarray(data, dtype=float), self.levels)


# --------------------------------------------------------------------------
# model factories

NORMAL_KNOWN_DEFAULTS = {"mu_tilde": 3.0, "sigma": 1.0, "c": 100.0}

# theta values that give every data model expectation 2
EXPO_TRUE_PARAMS = {"M1": 0.5, "M2": math.log(2.0) - 0.5, "M3": 1.0}

GANDK_TRUE_PARAMS = {"M1": (2.0,), "M2": (1.0, 2.0)}  # (k,) and (g, k)


def normal_mean_models(
    mu_tilde: float = 3.0,
    sigma: Optional[float] = 1.0,
    c: float = 100.0,
    variance_prior_on: str = "variance",
):
    """Null/alternative pair for the normal mean test.

    With sigma known, M0 fixes mu = mu_tilde and M1 draws mu ~ N(mu_tilde,
    c * sigma^2); summaries are the sample mean. With sigma unknown (None),
    both models draw sigma^2 ~ Gamma(0.1, 0.1) (a prior on the variance by
    default; ``variance_prior_on="precision"`` switches the reading) and the
    summary gains the sample variance.
    """
    if c <= 0:
        raise ParameterDomainError(f"prior scale c must be > 0, got {c}")
    if sigma is not None:
        if sigma <= 0:
            raise ParameterDomainError(f"sigma must be > 0, got {sigma}")
        s2 = sigma * sigma
        m0 = ModelSpec(
            0, "M0", (), _PointPrior(), _NormalSimulator(fixed_mu=mu_tilde, fixed_sigma2=s2),
            _MeanSummary(),
        )
        m1 = ModelSpec(
            1, "M1", ("mu",), _GaussianPrior(mu_tilde, c * s2),
            _NormalSimulator(fixed_sigma2=s2), _MeanSummary(),
        )
        return m0, m1
    if variance_prior_on not in ("variance", "precision"):
        raise ParameterDomainError(f"unknown variance prior target {variance_prior_on!r}")
    m0 = ModelSpec(
        0, "M0", ("sigma2",),
        _NormalVariancePrior(0.1, 0.1, variance_prior_on),
        _NormalSimulator(fixed_mu=mu_tilde), _MeanVarSummary(),
    )
    m1 = ModelSpec(
        1, "M1", ("mu", "sigma2"),
        _NormalVariancePrior(0.1, 0.1, variance_prior_on, mu_tilde=mu_tilde, c=c),
        _NormalSimulator(), _MeanVarSummary(),
    )
    return m0, m1


def expo_family_models():
    """Exponential vs lognormal vs gamma, all with closed-form marginals.

    M1: y ~ Exp(theta), theta ~ Exp(1); M2: y ~ LogNormal(theta, 1),
    theta ~ N(0, 1); M3: y ~ Gamma(2, theta), theta ~ Exp(1). All three share
    the sufficient summary (sum y, sum log y, sum log^2 y).
    """
    eta = _SufficientExpoSummary()
    m1 = ModelSpec(0, "M1", ("theta",), _ExponentialPrior(1.0), _ExponentialSimulator(), eta)
    m2 = ModelSpec(1, "M2", ("theta",), _GaussianPrior(0.0, 1.0), _LognormalSimulator(), eta)
    m3 = ModelSpec(2, "M3", ("theta",), _ExponentialPrior(1.0), _GammaSimulator(2.0), eta)
    return m1, m2, m3


def gandk_models():
    """g-and-k skewness test: M1 fixes g = 0, M2 draws g ~ U(0, 4); both draw
    k ~ U(-0.5, 5) with a = 0, b = 1, c = 0.8 known. Summaries are the
    empirical 0.1 and 0.9 quantiles."""
    eta = _QuantilePairSummary((0.1, 0.9))
    m1 = ModelSpec(
        0, "M1", ("k",), _UniformPrior(((-0.5, 5.0),)), _GandKSimulator(fixed_g=0.0), eta,
    )
    m2 = ModelSpec(
        1, "M2", ("g", "k"), _UniformPrior(((0.0, 4.0), (-0.5, 5.0))), _GandKSimulator(), eta,
    )
    return m1, m2
