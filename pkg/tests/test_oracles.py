import numpy as np
import pytest
from scipy import integrate, stats

from abcselect.errors import ParameterDomainError, ShapeError
from abcselect.oracles import (
    bayes_factor_normal_known,
    exact_posterior_expo,
    exact_posterior_normal_known,
    marginal_likelihood_expo,
    score_method,
)

RNG = np.random.default_rng(7)


# ---------------------------------------------------------------------------
# quadrature oracles


def quad_bayes_factor(y, mu_tilde, sigma, c):
    """B01 via direct quadrature of the alternative's marginal likelihood."""
    y = np.asarray(y, dtype=float)
    n = y.size

    def loglik(mu):
        return -0.5 * np.sum((y - mu) ** 2) / sigma**2 - n * np.log(
            sigma * np.sqrt(2 * np.pi))

    shift = loglik(y.mean())
    prior_sd = np.sqrt(c) * sigma

    def integrand(mu):
        return np.exp(loglik(mu) - shift) * stats.norm.pdf(mu, mu_tilde, prior_sd)

    lo = min(y.mean(), mu_tilde) - 12 * prior_sd
    hi = max(y.mean(), mu_tilde) + 12 * prior_sd
    p1, _ = integrate.quad(integrand, lo, hi, limit=400,
                           points=[mu_tilde, y.mean()], epsabs=0, epsrel=1e-12)
    p0 = np.exp(loglik(mu_tilde) - shift)
    return p0 / p1


def quad_marginal_expo(model, y):
    """log marginal via quadrature over theta, shifted for stability."""
    y = np.asarray(y, dtype=float)
    n = y.size
    s = y.sum()
    ly = np.log(y)

    if model == 1:
        def loglik(t):
            return n * np.log(t) - t * s
        def logprior(t):
            return -t
        t_hat = n / (1.0 + s)
        lo, hi = 0.0, 20.0 * t_hat + 200.0
    elif model == 2:
        s1 = ly.sum()
        def loglik(t):
            return (-0.5 * np.sum((ly - t) ** 2) - s1
                    - 0.5 * n * np.log(2 * np.pi))
        def logprior(t):
            return stats.norm.logpdf(t)
        t_hat = s1 / (n + 1.0)
        lo, hi = t_hat - 40.0, t_hat + 40.0
    else:
        def loglik(t):
            return 2 * n * np.log(t) - t * s + ly.sum()
        def logprior(t):
            return -t
        t_hat = 2 * n / (1.0 + s)
        lo, hi = 0.0, 20.0 * t_hat + 200.0

    shift = loglik(t_hat) + logprior(t_hat)

    def integrand(t):
        return np.exp(loglik(t) + logprior(t) - shift)

    val, _ = integrate.quad(integrand, lo, hi, limit=400, points=[t_hat],
                            epsabs=0, epsrel=1e-12)
    return np.log(val) + shift


# ---------------------------------------------------------------------------
# Bayes factor, normal mean test


def test_bayes_factor_zero_exponent_case():
    # ybar == mu_tilde leaves sqrt(c n + 1); c=100, n=100 -> sqrt(10001)
    y = np.concatenate([3.0 + np.linspace(-1, 1, 50), 3.0 - np.linspace(-1, 1, 50)])
    assert y.mean() == pytest.approx(3.0)
    b = bayes_factor_normal_known(y, 3.0, 1.0, 100.0)
    assert b == pytest.approx(np.sqrt(10001.0), rel=1e-12)
    assert b == pytest.approx(100.005, abs=1e-3)


def test_bayes_factor_matches_quadrature():
    # acceptance-grade: 100 random configurations, relative error < 1e-8
    for _ in range(100):
        n = int(RNG.integers(1, 21))
        mu_tilde = float(RNG.normal(0, 2))
        sigma = float(RNG.uniform(0.3, 3.0))
        c = float(RNG.uniform(0.5, 200.0))
        y = RNG.normal(mu_tilde + RNG.normal(0, 0.5), sigma, size=n)
        ours = bayes_factor_normal_known(y, mu_tilde, sigma, c)
        ref = quad_bayes_factor(y, mu_tilde, sigma, c)
        assert ours == pytest.approx(ref, rel=1e-8)


def test_bayes_factor_printed_variant_disagrees_with_quadrature():
    y = RNG.normal(3.2, 1.0, size=50)
    printed = bayes_factor_normal_known(y, 3.0, 1.0, 100.0, as_printed=True)
    ref = quad_bayes_factor(y, 3.0, 1.0, 100.0)
    assert printed != pytest.approx(ref, rel=1e-3)


def test_posterior_from_bayes_factor():
    y = RNG.normal(3.0, 1.0, size=40)
    b = bayes_factor_normal_known(y, 3.0, 1.0, 100.0)
    probs = exact_posterior_normal_known(y, 3.0, 1.0, 100.0).model_probs
    assert probs[0] == pytest.approx(b / (1 + b), rel=1e-12)
    assert probs.sum() == pytest.approx(1.0, abs=1e-12)


def test_bayes_factor_errors():
    with pytest.raises(ShapeError):
        bayes_factor_normal_known([], 3.0, 1.0, 100.0)
    with pytest.raises(ParameterDomainError):
        bayes_factor_normal_known([1.0], 3.0, -1.0, 100.0)


# ---------------------------------------------------------------------------
# exponential-family marginals


def test_marginal_single_point_values():
    # quadrature oracles give 1/4, 1/(2 sqrt(pi)), 1/4 for y = (1,)
    assert marginal_likelihood_expo(1, [1.0]) == pytest.approx(np.log(0.25), rel=1e-12)
    assert marginal_likelihood_expo(2, [1.0]) == pytest.approx(
        np.log(1.0 / (2.0 * np.sqrt(np.pi))), rel=1e-12)
    assert marginal_likelihood_expo(3, [1.0]) == pytest.approx(np.log(0.25), rel=1e-12)
    for model in (1, 2, 3):
        assert marginal_likelihood_expo(model, [1.0]) == pytest.approx(
            quad_marginal_expo(model, [1.0]), rel=1e-9)


def test_marginals_match_quadrature():
    # acceptance-grade: 50 random datasets, n <= 20, relative error < 1e-6
    gens = {
        1: lambda n: RNG.exponential(2.0, n),
        2: lambda n: RNG.lognormal(0.2, 1.0, n),
        3: lambda n: RNG.gamma(2.0, 1.0, n),
    }
    for i in range(50):
        model = (i % 3) + 1
        n = int(RNG.integers(1, 21))
        y = gens[model](n)
        ours = marginal_likelihood_expo(model, y)
        ref = quad_marginal_expo(model, y)
        assert ours == pytest.approx(ref, rel=1e-6)


def test_marginal_large_n_finite():
    # Gamma(2n + 1) at n = 1000 overflows outside log space
    y = RNG.gamma(2.0, 1.0, 1000)
    for model in (1, 2, 3):
        assert np.isfinite(marginal_likelihood_expo(model, y))


def test_marginal_rejects_nonpositive():
    with pytest.raises(ParameterDomainError):
        marginal_likelihood_expo(1, [1.0, -0.5])
    with pytest.raises(ParameterDomainError):
        marginal_likelihood_expo(4, [1.0])


def test_exact_posterior_expo_properties():
    y = RNG.gamma(2.0, 1.0, 200)
    post = exact_posterior_expo(y)
    assert post.model_probs.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(post.model_probs >= 0)
    # shift invariance of the softmax
    shifted = np.exp(post.log_marginals + 123.0)
    assert shifted / shifted.sum() == pytest.approx(post.model_probs, rel=1e-9)
    # Bayes factors consistent with probabilities
    bf = post.bayes_factors
    assert bf[0, 1] == pytest.approx(post.model_probs[0] / post.model_probs[1], rel=1e-6)


def test_exact_posterior_expo_m3_dominates_at_large_n():
    y = np.random.default_rng(3).gamma(2.0, 1.0, 1000)
    post = exact_posterior_expo(y)
    assert post.model_probs[2] > 0.99


# ---------------------------------------------------------------------------
# scoring


def test_score_perfect_estimates():
    est = np.array([[0.9, 0.1], [0.2, 0.8]])
    score = score_method(est, [0, 1], exact_probs=est, designated="true")
    assert score.mae == 0.0 and score.mse == 0.0 and score.per == 0.0


def test_score_hand_arithmetic():
    # two datasets with absolute errors 0.1 and 0.3 on the tracked model
    est = np.array([[0.6, 0.4], [0.9, 0.1]])
    exact = np.array([[0.5, 0.5], [0.6, 0.4]])
    score = score_method(est, [0, 0], exact_probs=exact, designated=0)
    assert score.mae == pytest.approx(0.2)
    assert score.mse == pytest.approx(0.05)
    assert score.per == 0.0


def test_score_per_counts_ties_as_errors():
    est = np.array([[0.5, 0.5], [0.7, 0.3]])
    score = score_method(est, [0, 0])
    assert score.per == pytest.approx(0.5)
    assert score.mae is None and score.mse is None


def test_score_per_invariant_to_argmax_preserving_transform():
    est = RNG.dirichlet(np.ones(3), size=40)
    labels = RNG.integers(0, 3, size=40)
    base = score_method(est, labels).per
    transformed = np.sqrt(est)  # strictly monotone, preserves argmax
    assert score_method(transformed, labels).per == base


def test_score_misaligned_inputs():
    with pytest.raises(ShapeError):
        score_method(np.ones((3, 2)), [0, 1])
