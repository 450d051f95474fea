"""Exact posterior computations and the evaluation metrics for scoring ABC output."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import ParameterDomainError, ShapeError

__all__ = [
    "ExactPosterior",
    "MethodScore",
    "bayes_factor_normal_known",
    "exact_posterior_normal_known",
    "marginal_likelihood_expo",
    "exact_posterior_expo",
    "score_method",
]


@dataclass(frozen=True)
class ExactPosterior:
    """Exact model probabilities, with the pairwise Bayes-factor matrix."""

    model_probs: np.ndarray
    log_marginals: Optional[np.ndarray] = None
    bayes_factors: Optional[np.ndarray] = None


@dataclass(frozen=True)
class MethodScore:
    """MAE/MSE of the tracked model's probability and the prior error rate."""

    mae: Optional[float]
    mse: Optional[float]
    per: float
    n_datasets: int


def bayes_factor_normal_known(
    y, mu_tilde: float, sigma: float, c: float, as_printed: bool = False
) -> float:
    """Bayes factor B01 for the normal mean test with known variance.

    B01 = sqrt(c*n + 1) * exp(-0.5 * kappa * ((ybar - mu_tilde)/(sigma/sqrt(n)))^2)

    with kappa = c*n/(c*n + 1), the constant validated against direct
    quadrature of the two marginal likelihoods. ``as_printed=True`` switches
    to kappa = c*n/(c + 1) for fidelity comparisons; that variant disagrees
    with quadrature and is not used anywhere else.
    """
    yv = np.asarray(y, dtype=float).ravel()
    if yv.size == 0:
        raise ShapeError("empty sample")
    if sigma <= 0 or c <= 0:
        raise ParameterDomainError("sigma and c must be > 0")
    n = yv.size
    t2 = ((yv.mean() - mu_tilde) / (sigma / np.sqrt(n))) ** 2
    kappa = c * n / (c + 1.0) if as_printed else c * n / (c * n + 1.0)
    return float(np.sqrt(c * n + 1.0) * np.exp(-0.5 * kappa * t2))


def exact_posterior_normal_known(
    y, mu_tilde: float, sigma: float, c: float
) -> ExactPosterior:
    """(pi(M0|y), pi(M1|y)) under the uniform model prior."""
    b01 = bayes_factor_normal_known(y, mu_tilde, sigma, c)
    p0 = b01 / (1.0 + b01)
    probs = np.array([p0, 1.0 - p0])
    bf = np.array([[1.0, b01], [1.0 / b01 if b01 > 0 else np.inf, 1.0]])
    return ExactPosterior(probs, bayes_factors=bf)


def marginal_likelihood_expo(model: int, y) -> float:
    """Log marginal likelihood for the exponential-family candidates.

    model 1: y ~ Exp(theta), theta ~ Exp(1):
        Gamma(n+1) * (1 + sum y)^(-n-1)
    model 2: y ~ LogNormal(theta, 1), theta ~ N(0, 1):
        exp((sum log y)^2 / (2(n+1)) - sum log^2 y / 2 - sum log y)
        * (2 pi)^(-n/2) * (n+1)^(-1/2)
    model 3: y ~ Gamma(2, theta), theta ~ Exp(1):
        exp(sum log y) * Gamma(2n+1) * (1 + sum y)^(-2n-1)

    Everything is evaluated in log space (Gamma(2n+1) overflows otherwise).
    """
    yv = np.asarray(y, dtype=float).ravel()
    if yv.size == 0:
        raise ShapeError("empty sample")
    if np.any(yv <= 0):
        raise ParameterDomainError("data must be strictly positive")
    n = yv.size
    s = float(np.sum(yv))
    if model == 1:
        return float(gammaln(n + 1) - (n + 1) * np.log1p(s))
    if model == 2:
        ly = np.log(yv)
        s1 = float(np.sum(ly))
        s2 = float(np.sum(ly * ly))
        return float(
            s1 * s1 / (2.0 * (n + 1)) - s2 / 2.0 - s1
            - 0.5 * n * np.log(2.0 * np.pi) - 0.5 * np.log(n + 1.0)
        )
    if model == 3:
        s1 = float(np.sum(np.log(yv)))
        return float(s1 + gammaln(2 * n + 1) - (2 * n + 1) * np.log1p(s))
    raise ParameterDomainError(f"model must be 1, 2 or 3, got {model}")


def exact_posterior_expo(y) -> ExactPosterior:
    """Softmax of the three log marginals under the uniform model prior."""
    logs = np.array([marginal_likelihood_expo(k, y) for k in (1, 2, 3)])
    probs = np.exp(logs - logsumexp(logs))
    probs /= probs.sum()
    bf = np.exp(logs[:, None] - logs[None, :])
    return ExactPosterior(probs, log_marginals=logs, bayes_factors=bf)


def _per_errors(estimates: np.ndarray, true_labels: np.ndarray) -> np.ndarray:
    """A dataset counts as an error unless the true model is the unique argmax."""
    top = estimates.max(axis=1)
    is_top = estimates >= top[:, None]
    unique_top = is_top.sum(axis=1) == 1
    correct = is_top[np.arange(len(true_labels)), true_labels] & unique_top
    return ~correct


def score_method(
    estimates,
    true_labels,
    exact_probs=None,
    designated="true",
) -> MethodScore:
    """Score per-dataset posterior estimates against the truth.

    estimates: (D, K) estimated model probabilities. true_labels: (D,) 0-based
    indices of each dataset's generating model. exact_probs: (D, K) exact
    probabilities, or None for label-only (PER-only) benchmarks. ``designated``
    picks the model whose probability MAE/MSE tracks: a fixed index, or
    "true" for each dataset's own generating model.
    """
    est = np.atleast_2d(np.asarray(estimates, dtype=float))
    labels = np.asarray(true_labels, dtype=int).ravel()
    if est.shape[0] != labels.size:
        raise ShapeError("estimates and true_labels are misaligned")
    per = float(np.mean(_per_errors(est, labels)))
    mae = mse = None
    if exact_probs is not None:
        ex = np.atleast_2d(np.asarray(exact_probs, dtype=float))
        if ex.shape != est.shape:
            raise ShapeError("exact_probs and estimates are misaligned")
        if designated == "true":
            cols = labels
        else:
            cols = np.full(labels.size, int(designated))
        rows = np.arange(est.shape[0])
        err = est[rows, cols] - ex[rows, cols]
        mae = float(np.mean(np.abs(err)))
        mse = float(np.mean(err * err))
    return MethodScore(mae, mse, per, int(est.shape[0]))
