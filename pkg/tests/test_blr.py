import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsbandits import blr


def quadrature_posterior_1d(tau2, sigma2, phi, rewards, grid):
    """Numerically integrate the unnormalized posterior density on a grid."""
    log_prior = -0.5 * grid**2 / tau2
    log_lik = np.zeros_like(grid)
    for x, r in zip(phi, rewards):
        log_lik += -0.5 * (r - grid * x) ** 2 / sigma2
    dens = np.exp(log_prior + log_lik - np.max(log_prior + log_lik))
    dens /= np.trapz(dens, grid)
    mean = np.trapz(grid * dens, grid)
    var = np.trapz((grid - mean) ** 2 * dens, grid)
    return mean, var


class TestPosteriorFit:
    def test_empty_data_equals_prior(self):
        prior = blr.PriorSpec(feature_dim=3, tau2=2.0, sigma2=1.0)
        post = blr.posterior_fit(prior, np.zeros((0, 3)), np.zeros(0))
        np.testing.assert_allclose(post.mean, np.zeros(3), atol=1e-14)
        np.testing.assert_allclose(post.cov, 2.0 * np.eye(3), atol=1e-12)

    def test_one_dimensional_closed_form(self):
        prior = blr.PriorSpec(feature_dim=1, tau2=1.0, sigma2=1.0)
        post = blr.posterior_fit(prior, np.array([[1.0]]), np.array([2.0]))
        assert post.cov[0, 0] == pytest.approx(0.5, abs=1e-12)
        assert post.mean[0] == pytest.approx(1.0, abs=1e-12)

    def test_matches_quadrature_oracle_1d(self, rng):
        prior = blr.PriorSpec(feature_dim=1, tau2=0.7, sigma2=0.3)
        phi = rng.standard_normal(6)
        rewards = 0.8 * phi + 0.1 * rng.standard_normal(6)
        post = blr.posterior_fit(prior, phi[:, None], rewards)
        grid = np.linspace(-6, 6, 200_001)
        mean, var = quadrature_posterior_1d(0.7, 0.3, phi, rewards, grid)
        assert post.mean[0] == pytest.approx(mean, abs=1e-8)
        assert post.cov[0, 0] == pytest.approx(var, abs=1e-8)

    def test_matches_quadrature_oracle_2d(self, rng):
        # Marginal moments from a 2-D grid of the unnormalized density.
        prior = blr.PriorSpec(feature_dim=2, tau2=1.0, sigma2=0.5)
        phi = rng.standard_normal((5, 2))
        rewards = phi @ np.array([0.5, -0.3]) + 0.2 * rng.standard_normal(5)
        post = blr.posterior_fit(prior, phi, rewards)

        g = np.linspace(-5, 5, 1201)
        w0, w1 = np.meshgrid(g, g, indexing="ij")
        logp = -0.5 * (w0**2 + w1**2) / 1.0
        for x, r in zip(phi, rewards):
            logp += -0.5 * (r - w0 * x[0] - w1 * x[1]) ** 2 / 0.5
        dens = np.exp(logp - logp.max())
        dens /= dens.sum()
        mean0 = (w0 * dens).sum()
        mean1 = (w1 * dens).sum()
        cov00 = ((w0 - mean0) ** 2 * dens).sum()
        cov01 = ((w0 - mean0) * (w1 - mean1) * dens).sum()
        np.testing.assert_allclose(post.mean, [mean0, mean1], atol=1e-8)
        assert post.cov[0, 0] == pytest.approx(cov00, abs=1e-8)
        assert post.cov[0, 1] == pytest.approx(cov01, abs=1e-8)

    def test_batch_equals_incremental_union(self, rng):
        prior = blr.PriorSpec(feature_dim=4, tau2=1.5, sigma2=0.2)
        phi = rng.standard_normal((20, 4))
        rewards = rng.standard_normal(20)
        full = blr.posterior_fit(prior, phi, rewards)
        refit = blr.posterior_fit(prior, phi[:19], rewards[:19])  # unused on purpose
        union = blr.posterior_fit(
            prior, np.vstack([phi[:19], phi[19:]]), np.concatenate([rewards[:19], rewards[19:]])
        )
        np.testing.assert_allclose(full.mean, union.mean, atol=1e-10)
        np.testing.assert_allclose(full.cov, union.cov, atol=1e-10)
        assert refit.mean.shape == (4,)

    def test_converges_to_least_squares(self, rng):
        prior = blr.PriorSpec(feature_dim=3, tau2=1e6, sigma2=0.1)
        phi = rng.standard_normal((500, 3))
        w_true = np.array([1.0, -2.0, 0.5])
        rewards = phi @ w_true + 0.1 * rng.standard_normal(500)
        post = blr.posterior_fit(prior, phi, rewards)
        lstsq = np.linalg.pinv(phi) @ rewards
        assert np.linalg.norm(post.mean - lstsq) < 1e-6

    def test_covariance_shrinks_monotonically(self, rng):
        prior = blr.PriorSpec(feature_dim=3, tau2=1.0, sigma2=0.5)
        phi = rng.standard_normal((10, 3))
        rewards = rng.standard_normal(10)
        prev = blr.posterior_fit(prior, phi[:0], rewards[:0])
        for n in range(1, 11):
            post = blr.posterior_fit(prior, phi[:n], rewards[:n])
            assert np.all(np.diag(post.cov) <= np.diag(prev.cov) + 1e-12)
            prev = post

    def test_rejects_non_finite(self):
        prior = blr.PriorSpec(feature_dim=1, tau2=1.0, sigma2=1.0)
        with pytest.raises(ValueError):
            blr.posterior_fit(prior, np.array([[np.nan]]), np.array([1.0]))

    def test_rejects_length_mismatch(self):
        prior = blr.PriorSpec(feature_dim=1, tau2=1.0, sigma2=1.0)
        with pytest.raises(ValueError):
            blr.posterior_fit(prior, np.ones((2, 1)), np.ones(3))


class TestPosteriorSample:
    def test_collapsed_posterior_returns_mean(self):
        prior = blr.PriorSpec(feature_dim=2, tau2=1e-18, sigma2=1.0)
        post = blr.posterior_fit(prior, np.zeros((0, 2)), np.zeros(0))
        sample = blr.posterior_sample(post, np.random.default_rng(0))
        np.testing.assert_allclose(sample, post.mean, atol=1e-8)

    def test_identity_covariance_passes_through_noise(self):
        post = blr.GaussianPosterior(
            mean=np.array([1.0, 2.0]), cov=np.eye(2), cov_chol=np.eye(2)
        )
        rng1 = np.random.default_rng(7)
        rng2 = np.random.default_rng(7)
        eps = rng2.standard_normal(2)
        sample = blr.posterior_sample(post, rng1)
        np.testing.assert_array_equal(sample, post.mean + eps)

    def test_monte_carlo_moments(self):
        prior = blr.PriorSpec(feature_dim=2, tau2=1.0, sigma2=1.0)
        post = blr.posterior_fit(prior, np.zeros((0, 2)), np.zeros(0))
        rng = np.random.default_rng(11)
        samples = np.array([blr.posterior_sample(post, rng) for _ in range(100_000)])
        np.testing.assert_allclose(samples.mean(axis=0), np.zeros(2), atol=0.02)
        np.testing.assert_allclose(np.cov(samples.T), np.eye(2), atol=0.02)

    def test_reproducible_given_seed(self, rng):
        prior = blr.PriorSpec(feature_dim=3, tau2=1.0, sigma2=0.5)
        phi = rng.standard_normal((8, 3))
        post = blr.posterior_fit(prior, phi, rng.standard_normal(8))
        a = blr.posterior_sample(post, np.random.default_rng(3))
        b = blr.posterior_sample(post, np.random.default_rng(3))
        np.testing.assert_array_equal(a, b)
        assert blr.predict(a, phi[0]) == blr.predict(b, phi[0])


class TestPredict:
    def test_zero_weights(self):
        assert blr.predict(np.zeros(3), np.ones(3)) == 0.0

    def test_basis_vector(self):
        assert blr.predict(np.array([1.0, 0, 0]), np.array([3.0, 9, 9])) == 3.0

    def test_matches_summation_oracle(self, rng):
        w = rng.standard_normal(5)
        x = rng.standard_normal(5)
        expected = sum(w[i] * x[i] for i in range(5))
        assert blr.predict(w, x) == pytest.approx(expected, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            blr.predict(np.zeros(2), np.zeros(3))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(0, 12))
def test_chol_factor_reproduces_covariance(seed, n):
    rng = np.random.default_rng(seed)
    prior = blr.PriorSpec(feature_dim=3, tau2=1.0, sigma2=0.4)
    phi = rng.standard_normal((n, 3))
    post = blr.posterior_fit(prior, phi, rng.standard_normal(n))
    np.testing.assert_allclose(post.cov_chol @ post.cov_chol.T, post.cov, atol=1e-10)
