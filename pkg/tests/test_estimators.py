import numpy as np
import pytest

from ddlab.estimators import (
    bootstrap_ci,
    bootstrap_values,
    empirical_fd,
    empirical_moments,
    per_eig_errors,
)
from ddlab.spectral import Spectrum, eigendecompose


def exact_moment_batch(n, mu, Sigma, seed):
    """A batch whose sample mean and (n-1)-covariance equal (mu, Sigma)
    exactly, built by whitening a random draw."""
    rng = np.random.default_rng(seed)
    d = len(mu)
    x = rng.standard_normal((n, d))
    x -= x.mean(axis=0)
    cov = (x.T @ x) / (n - 1)
    L = np.linalg.cholesky(np.linalg.inv(cov))
    target_L = np.linalg.cholesky(Sigma)
    return x @ L @ target_L.T + mu


# ---------------------------------------------------------------------------
# moments


def test_empirical_moments_two_points():
    est = empirical_moments(np.array([[0.0], [2.0]]))
    assert est.mu[0] == pytest.approx(1.0)
    assert est.Sigma[0, 0] == pytest.approx(2.0)  # unbiased: (1 + 1) / 1
    assert est.n == 2


def test_empirical_moments_constant_batch():
    est = empirical_moments(np.full((8, 3), 2.5))
    np.testing.assert_allclose(est.mu, np.full(3, 2.5))
    np.testing.assert_allclose(est.Sigma, np.zeros((3, 3)))


def test_empirical_moments_needs_two_samples():
    with pytest.raises(ValueError):
        empirical_moments(np.array([[1.0, 2.0]]))


def test_empirical_moments_whitened_batch():
    mu = np.array([1.0, -2.0])
    Sigma = np.array([[2.0, 0.3], [0.3, 0.5]])
    x = exact_moment_batch(100, mu, Sigma, seed=0)
    est = empirical_moments(x)
    np.testing.assert_allclose(est.mu, mu, atol=1e-12)
    np.testing.assert_allclose(est.Sigma, Sigma, atol=1e-12)


# ---------------------------------------------------------------------------
# Frechet distance of a batch


def test_empirical_fd_exact_batch_is_zero():
    mu = np.array([0.5, 1.5])
    Sigma = np.diag([4.0, 1.0])
    x = exact_moment_batch(60, mu, Sigma, seed=1)
    assert empirical_fd(x, mu, Sigma) == pytest.approx(0.0, abs=1e-12)


def test_empirical_fd_pure_mean_shift():
    Sigma = np.eye(2)
    x = exact_moment_batch(60, np.zeros(2), Sigma, seed=2)
    fd = empirical_fd(x + np.array([3.0, 0.0]), np.zeros(2), Sigma)
    assert fd == pytest.approx(9.0, rel=1e-12)


def test_empirical_fd_pure_variance_gap():
    x = exact_moment_batch(60, np.zeros(1), np.array([[4.0]]), seed=3)
    fd = empirical_fd(x, np.zeros(1), np.array([[1.0]]))
    assert fd == pytest.approx(1.0, rel=1e-12)  # (2 - 1)^2


def test_empirical_fd_dimension_mismatch():
    with pytest.raises(ValueError):
        empirical_fd(np.zeros((5, 2)), np.zeros(3), np.eye(3))


# ---------------------------------------------------------------------------
# bootstrap


def test_bootstrap_values_shape_and_determinism():
    rng = np.random.default_rng(4)
    x = rng.standard_normal((200, 2))
    ref = (np.zeros(2), np.eye(2))
    a = bootstrap_values(x, ref, B=64, seed=9)
    b = bootstrap_values(x, ref, B=64, seed=9)
    assert a.shape == (64,)
    np.testing.assert_array_equal(a, b)
    c = bootstrap_values(x, ref, B=64, seed=10)
    assert np.max(np.abs(a - c)) > 0.0


def test_bootstrap_values_center_near_raw():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((2000, 1)) + 1.0
    ref = (np.zeros(1), np.eye(1))
    raw = empirical_fd(x, *ref)
    vals = bootstrap_values(x, ref, B=128, seed=0)
    assert np.mean(vals) == pytest.approx(raw, rel=0.1)


def test_bootstrap_ci_constant_statistic_collapses():
    x = np.random.default_rng(6).standard_normal((50, 1))
    lo, hi = bootstrap_ci(x, (np.zeros(1), np.eye(1)), statistic=lambda *_: 3.25, B=32)
    assert lo == hi == 3.25


def test_bootstrap_ci_brackets_raw_value():
    rng = np.random.default_rng(7)
    x = rng.standard_normal((500, 2)) * 1.3
    ref = (np.zeros(2), np.eye(2))
    raw = empirical_fd(x, *ref)
    lo, hi = bootstrap_ci(x, ref, B=256, seed=1)
    assert lo < hi
    assert lo < raw * 1.6 and hi > raw * 0.6


def test_bootstrap_ci_width_shrinks_with_n():
    ref = (np.zeros(1), np.eye(1))
    widths = []
    for n in (100, 10_000):
        x = exact_moment_batch(n, np.array([0.5]), np.array([[1.0]]), seed=8)
        lo, hi = bootstrap_ci(x, ref, B=128, seed=2)
        widths.append(hi - lo)
    assert widths[1] < 0.3 * widths[0]


def test_bootstrap_validation():
    x = np.zeros((10, 1))
    ref = (np.zeros(1), np.eye(1))
    with pytest.raises(ValueError):
        bootstrap_values(x, ref, B=1)
    with pytest.raises(ValueError):
        bootstrap_ci(x, ref, level=1.0)


# ---------------------------------------------------------------------------
# per-eigendirection decomposition


def test_per_eig_errors_sum_to_full_fd_when_bases_align():
    Sigma = np.array([[3.0, 1.0], [1.0, 2.0]])
    mu = np.array([0.7, -0.2])
    sp = eigendecompose(Sigma, mu=mu)
    # batch whose covariance is diagonal in the target's eigenbasis, so
    # the full Frechet distance splits exactly across directions
    lam_hat = np.array([2.0, 1.5])
    cov_hat = (sp.U * lam_hat) @ sp.U.T
    mu_hat = mu + sp.U @ np.array([0.1, -0.3])
    x = exact_moment_batch(80, mu_hat, cov_hat, seed=9)
    pe = per_eig_errors(x, sp)
    full = empirical_fd(x, mu, Sigma)
    assert pe.fd_contrib.sum() == pytest.approx(full, rel=1e-9)
    np.testing.assert_allclose(pe.var_err, lam_hat - sp.lambdas, atol=1e-10)
    np.testing.assert_allclose(pe.mean_err, [0.1, -0.3], atol=1e-10)
    assert not pe.clamped.any()


def test_per_eig_errors_requires_basis():
    with pytest.raises(ValueError):
        per_eig_errors(np.zeros((10, 2)), Spectrum(np.array([1.0, 0.5])))
