import numpy as np
import pytest
from scipy import stats

from ddlab.exact_oracle import discrete_moments
from ddlab.sampler import (
    GMM,
    Gaussian,
    em_sample,
    gmm_log_density,
    gmm_score,
    power_law_gmm,
    reverse_step,
)
from ddlab.schedules import make_schedule
from ddlab.spectral import power_law_lambdas


def ve5():
    return make_schedule("ve", beta=5.0, sigma_max=80.0, T=1.0)


def two_wells(sep=3.0):
    means = np.array([[-sep, 0.0], [sep, 0.0]])
    covs = np.array([np.eye(2), np.eye(2)])
    return GMM(np.array([0.5, 0.5]), means, covs)


# ---------------------------------------------------------------------------
# mixture containers


def test_gmm_validation():
    with pytest.raises(ValueError):
        GMM(np.array([0.7, 0.7]), np.zeros((2, 1)), np.ones((2, 1, 1)))
    with pytest.raises(ValueError):
        GMM(np.array([1.5, -0.5]), np.zeros((2, 1)), np.ones((2, 1, 1)))
    with pytest.raises(ValueError):
        GMM(np.array([1.0]), np.zeros((1, 2)), -np.eye(2)[None])
    with pytest.raises(ValueError):
        GMM(np.array([1.0]), np.zeros((1, 2)), np.ones((1, 3, 3)))


def test_gmm_mixture_moments():
    g = two_wells(3.0)
    mu, cov = g.mixture_moments()
    np.testing.assert_allclose(mu, np.zeros(2), atol=1e-15)
    np.testing.assert_allclose(cov, np.diag([10.0, 1.0]), atol=1e-13)


def test_gmm_from_gaussian_round_trip():
    g = Gaussian(np.array([1.0, -2.0]), np.diag([4.0, 1.0]))
    m = GMM.from_gaussian(g)
    assert m.J == 1
    mu, cov = m.mixture_moments()
    np.testing.assert_allclose(mu, g.mu)
    np.testing.assert_allclose(cov, g.Sigma)


def test_gmm_sampling_moments():
    g = two_wells(2.0)
    x = g.sample(200_000, np.random.default_rng(0))
    np.testing.assert_allclose(x.mean(axis=0), [0.0, 0.0], atol=0.03)
    np.testing.assert_allclose(np.cov(x.T), np.diag([5.0, 1.0]), atol=0.06)


# ---------------------------------------------------------------------------
# scores and log densities


def test_score_single_component_is_gaussian_score():
    g = Gaussian(np.array([1.0, -1.0]), np.diag([4.0, 1.0]))
    sc = ve5()
    t = 0.3
    eta = float(sc.eta(sc.T - t))
    w = float(sc.w(sc.T - t))
    rng = np.random.default_rng(1)
    x = rng.standard_normal((50, 2)) * 10.0
    got = gmm_score(x, t, g, sc)
    prec = 1.0 / (eta ** 2 * (np.array([4.0, 1.0]) + w))
    want = -(x - eta * g.mu) * prec
    np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-15)


def test_score_vanishes_at_symmetry_point():
    g = two_wells(3.0)
    got = gmm_score(np.zeros(2), 0.4, g, ve5())
    np.testing.assert_allclose(got, np.zeros(2), atol=1e-12)


def test_score_is_gradient_of_log_density():
    g = two_wells(2.0)
    sc = ve5()
    t = 0.7
    rng = np.random.default_rng(2)
    x = rng.standard_normal((100, 2)) * 4.0
    s = gmm_score(x, t, g, sc)
    h = 1e-5
    for axis in range(2):
        e = np.zeros(2)
        e[axis] = h
        fd = (gmm_log_density(x + e, t, g, sc) - gmm_log_density(x - e, t, g, sc)) / (2 * h)
        np.testing.assert_allclose(s[:, axis], fd, rtol=1e-5, atol=1e-8)


def test_log_density_matches_scipy_single_component():
    g = Gaussian(np.array([0.5, -0.5]), np.diag([2.0, 1.0]))
    sc = ve5()
    t = 0.6
    eta = float(sc.eta(sc.T - t))
    w = float(sc.w(sc.T - t))
    x = np.random.default_rng(3).standard_normal((20, 2)) * 3.0
    got = gmm_log_density(x, t, g, sc)
    want = stats.multivariate_normal(eta * g.mu, eta ** 2 * (np.diag([2.0, 1.0]) + w * np.eye(2))).logpdf(x)
    np.testing.assert_allclose(got, want, rtol=1e-12)


# ---------------------------------------------------------------------------
# Euler stepping


def test_reverse_step_deterministic_part():
    sc = ve5()
    gamma = 0.01
    k = 30
    x = np.array([[1.0, -2.0], [0.5, 0.25]])
    s = lambda y, t: -0.1 * y
    t_k = k * gamma
    fwd = sc.T - t_k
    eta = float(sc.eta(fwd))
    A = float(sc.deta(fwd)) / eta
    xi = eta ** 2 * float(sc.dsigma(fwd)) * float(sc.sigma(fwd))
    alpha = 0.5
    want = x + gamma * (-A * x + (1 + alpha) * xi * (-0.1 * x))
    got = reverse_step(x, k, sc, alpha, s, gamma, noise=np.zeros_like(x))
    np.testing.assert_allclose(got, want, rtol=1e-12)


def test_reverse_step_noise_free_at_alpha_zero():
    sc = ve5()
    x = np.ones((4, 2))
    s = lambda y, t: -y
    a = reverse_step(x, 5, sc, 0.0, s, 0.01)
    b = reverse_step(x, 5, sc, 0.0, s, 0.01, noise=np.full_like(x, 7.0))
    np.testing.assert_array_equal(a, b)


def test_reverse_step_requires_noise_when_stochastic():
    sc = ve5()
    with pytest.raises(ValueError):
        reverse_step(np.ones((2, 2)), 5, sc, 0.5, lambda y, t: -y, 0.01)


# ---------------------------------------------------------------------------
# end-to-end sampling


def test_em_sample_deterministic_given_seed():
    g = Gaussian(np.zeros(2), np.diag([2.0, 1.0]))
    a = em_sample(g, ve5(), 0.5, K=20, n=500, seed=42)
    b = em_sample(g, ve5(), 0.5, K=20, n=500, seed=42)
    np.testing.assert_array_equal(a.x, b.x)
    c = em_sample(g, ve5(), 0.5, K=20, n=500, seed=43)
    assert np.max(np.abs(a.x - c.x)) > 1e-3


def test_em_sample_single_component_equals_gaussian_target():
    mu, Sigma = np.array([1.0, -1.0]), np.diag([3.0, 0.5])
    g = Gaussian(mu, Sigma)
    a = em_sample(g, ve5(), 0.25, K=15, n=200, seed=7)
    b = em_sample(GMM.from_gaussian(g), ve5(), 0.25, K=15, n=200, seed=7)
    np.testing.assert_array_equal(a.x, b.x)


def test_em_sample_batch_metadata():
    g = Gaussian(np.zeros(1), np.eye(1))
    batch = em_sample(g, ve5(), 0.5, K=10, n=64, seed=0)
    assert batch.n == 64 and batch.d == 1
    assert batch.seed == 0
    assert batch.sched_desc["family"] == "ve"


def test_em_sample_matches_moment_recursion():
    # the sample moments must sit within four standard errors of the
    # exactly propagated chain moments for the same (schedule, alpha, K)
    lam, alpha, K, n = 1.0, 0.5, 200, 40_000
    sc = ve5()
    g = Gaussian(np.zeros(1), np.array([[lam]]))
    batch = em_sample(g, sc, alpha, K=K, n=n, seed=11)
    path = discrete_moments(lam, 0.0, sc, alpha, K)
    m_hat = batch.x.mean()
    C_hat = batch.x.var(ddof=1)
    se_m = np.sqrt(path.C[-1] / n)
    se_C = path.C[-1] * np.sqrt(2.0 / (n - 1))
    assert abs(m_hat - path.m[-1]) < 4 * se_m
    assert abs(C_hat - path.C[-1]) < 4 * se_C


def test_em_sample_block_partition_is_part_of_the_stream():
    # noise substreams are drawn per block, so the partition is recorded
    # and reruns with the same (seed, block_size) are byte-identical
    g = Gaussian(np.zeros(2), np.eye(2))
    a = em_sample(g, ve5(), 0.5, K=10, n=300, seed=5, block_size=64)
    b = em_sample(g, ve5(), 0.5, K=10, n=300, seed=5, block_size=64)
    np.testing.assert_array_equal(a.x, b.x)
    assert a.block_size == 64


# ---------------------------------------------------------------------------
# synthetic mixture generator


def test_power_law_gmm_moments_are_exact():
    g = power_law_gmm(6, 4, p=1.2, lam_max=10.0, seed=3)
    mu, cov = g.mixture_moments()
    lams = np.linalg.eigvalsh(cov)[::-1]
    np.testing.assert_allclose(mu, np.zeros(6), atol=1e-12)
    np.testing.assert_allclose(lams, power_law_lambdas(6, 1.2, 10.0), rtol=1e-12)
    assert g.J == 4
    assert g.shared_cov


def test_power_law_gmm_scatter_fraction():
    # scatter_frac controls how much of each eigenvalue lives in the means
    tight = power_law_gmm(4, 3, p=1.0, lam_max=5.0, seed=0, scatter_frac=0.05)
    wide = power_law_gmm(4, 3, p=1.0, lam_max=5.0, seed=0, scatter_frac=0.9)
    m_t = np.mean(np.sum(tight.means ** 2, axis=1))
    m_w = np.mean(np.sum(wide.means ** 2, axis=1))
    assert m_w > 5.0 * m_t


def test_power_law_gmm_validation():
    with pytest.raises(ValueError):
        power_law_gmm(4, 0, p=1.0)
    with pytest.raises(ValueError):
        power_law_gmm(4, 2, p=1.0, scatter_frac=1.5)
