"""Monte-Carlo Euler reverse-SDE sampling with closed-form scores.

Targets are Gaussians or Gaussian mixtures, whose noised marginals stay
mixtures with component means eta_t mu_j and covariances
eta_t^2 (Sigma_j + sigma_t^2 I). Scores are therefore exact; the sampler
measures pure discretization plus Monte-Carlo error, with no score
estimation error in the way.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .rng import substream
from .schedules import DiffusionConfig, Schedule

__all__ = [
    "Gaussian",
    "GMM",
    "SampleBatch",
    "gmm_score",
    "gmm_log_density",
    "reverse_step",
    "em_sample",
    "power_law_gmm",
]

_LOG2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class Gaussian:
    """Gaussian target N(mu, Sigma)."""

    mu: np.ndarray
    Sigma: np.ndarray

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        S = np.atleast_2d(np.asarray(self.Sigma, dtype=float))
        if S.shape != (mu.size, mu.size):
            raise ValueError("Sigma shape must match mu")
        np.linalg.cholesky(S)  # SPD check
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "Sigma", S)

    @property
    def d(self) -> int:
        return self.mu.size


@dataclass(frozen=True)
class GMM:
    """Gaussian mixture: weights (J,), means (J,d), covs (J,d,d)."""

    weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        m = np.atleast_2d(np.asarray(self.means, dtype=float))
        C = np.asarray(self.covs, dtype=float)
        if C.ndim == 2:
            C = C[None, :, :]
        J, d = m.shape
        if w.shape != (J,) or C.shape != (J, d, d):
            raise ValueError("inconsistent GMM shapes")
        if np.any(w <= 0):
            raise ValueError("weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")
        for j in range(J):
            np.linalg.cholesky(C[j])
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "covs", C)

    @property
    def J(self) -> int:
        return self.weights.size

    @property
    def d(self) -> int:
        return self.means.shape[1]

    @property
    def shared_cov(self) -> bool:
        return self.J == 1 or all(np.array_equal(self.covs[j], self.covs[0]) for j in range(1, self.J))

    @classmethod
    def from_gaussian(cls, g: Gaussian) -> "GMM":
        return cls(weights=np.array([1.0]), means=g.mu[None, :], covs=g.Sigma[None, :, :])

    def mixture_moments(self):
        """Overall (mean, covariance) of the mixture."""
        mu = self.weights @ self.means
        dm = self.means - mu
        cov = np.einsum("j,jab->ab", self.weights, self.covs) + np.einsum(
            "j,ja,jb->ab", self.weights, dm, dm
        )
        return mu, cov

    def sample(self, n: int, gen: np.random.Generator) -> np.ndarray:
        """Draw n points from the mixture itself (no dynamics)."""
        if n < 1:
            raise ValueError("n must be positive")
        cum = np.cumsum(self.weights)
        comp = np.searchsorted(cum, gen.random(n))
        z = gen.standard_normal((n, self.d))
        chols = np.linalg.cholesky(self.covs)
        if self.shared_cov:
            x = z @ chols[0].T
        else:
            x = np.empty_like(z)
            for j in range(self.J):
                sel = comp == j
                x[sel] = z[sel] @ chols[j].T
        return self.means[comp] + x


@dataclass(frozen=True)
class SampleBatch:
    """Final-time sample array with its provenance."""

    x: np.ndarray
    seed: int
    config: DiffusionConfig
    sched_desc: Union[dict, str]
    block_size: int = 8192

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        if x.shape[0] < 1:
            raise ValueError("batch must contain at least one sample")
        if not np.all(np.isfinite(x)):
            raise ValueError("batch contains non-finite entries")
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def save(self, prefix: str) -> None:
        """Write raw row-major float64 samples plus a JSON sidecar."""
        self.x.astype("<f8").tofile(prefix + ".f64")
        meta = {
            "shape": list(self.x.shape),
            "dtype": "<f8",
            "order": "C",
            "seed": self.seed,
            "alpha": self.config.alpha,
            "K": self.config.K,
            "block_size": self.block_size,
            "schedule": self.sched_desc,
        }
        with open(prefix + ".json", "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)

    def to_csv(self, path) -> None:
        if self.d > 64:
            raise ValueError("CSV export is meant for small d; use save() instead")
        with open(path, "w") as fh:
            fh.write(",".join(f"x{i}" for i in range(self.d)) + "\n")
            for row in self.x:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")


# ---------------------------------------------------------------------------
# noised-mixture score

class _ScoreCtx:
    """Precomputed eigen-factorizations of a mixture's covariances.

    Supports evaluating the noised mixture's log-density and score at any
    (eta, w) pair without refactorizing: the noised covariance
    eta^2 (Sigma_j + w I) shares eigenvectors with Sigma_j.
    """

    def __init__(self, gmm: GMM):
        self.gmm = gmm
        self.logw = np.log(gmm.weights)
        if gmm.shared_cov:
            lam, U = np.linalg.eigh(gmm.covs[0])
            self.shared = (lam, U)
            self.comp = None
        else:
            self.shared = None
            self.comp = [np.linalg.eigh(gmm.covs[j]) for j in range(gmm.J)]

    def _log_comps_shared(self, x, eta, w):
        lam, U = self.shared
        e = eta * eta * (lam + w)
        Y = x @ U
        M = (eta * self.gmm.means) @ U
        qx = np.sum(Y * Y / e, axis=-1)
        qm = np.sum(M * M / e, axis=1)
        cross = (Y / e) @ M.T
        dist = qx[..., None] - 2.0 * cross + qm
        logdet = float(np.sum(np.log(e)))
        logn = -0.5 * (dist + logdet + self.gmm.d * _LOG2PI)
        return logn, (Y, M, e, U)

    def log_density(self, x, eta, w):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        xb = x[None, :] if single else x
        if self.shared is not None:
            logn, _ = self._log_comps_shared(xb, eta, w)
        else:
            logn = np.empty((xb.shape[0], self.gmm.J))
            for j, (lam, U) in enumerate(self.comp):
                e = eta * eta * (lam + w)
                Yj = (xb - eta * self.gmm.means[j]) @ U
                logn[:, j] = -0.5 * (
                    np.sum(Yj * Yj / e, axis=1) + float(np.sum(np.log(e))) + self.gmm.d * _LOG2PI
                )
        z = logn + self.logw
        zmax = np.max(z, axis=-1)
        out = zmax + np.log(np.sum(np.exp(z - zmax[..., None]), axis=-1))
        return float(out[0]) if single else out

    def score(self, x, eta, w):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        xb = x[None, :] if single else x
        if self.shared is not None:
            logn, (Y, M, e, U) = self._log_comps_shared(xb, eta, w)
            z = logn + self.logw
            z -= np.max(z, axis=1, keepdims=True)
            resp = np.exp(z)
            resp /= np.sum(resp, axis=1, keepdims=True)
            s = -((Y - resp @ M) / e) @ U.T
        else:
            z = np.empty((xb.shape[0], self.gmm.J))
            proj = []
            for j, (lam, U) in enumerate(self.comp):
                e = eta * eta * (lam + w)
                Yj = (xb - eta * self.gmm.means[j]) @ U
                z[:, j] = self.logw[j] - 0.5 * (
                    np.sum(Yj * Yj / e, axis=1) + float(np.sum(np.log(e))) + self.gmm.d * _LOG2PI
                )
                proj.append((Yj, e, U))
            z -= np.max(z, axis=1, keepdims=True)
            resp = np.exp(z)
            resp /= np.sum(resp, axis=1, keepdims=True)
            s = np.zeros_like(xb)
            for j, (Yj, e, U) in enumerate(proj):
                s -= resp[:, j : j + 1] * ((Yj / e) @ U.T)
        return s[0] if single else s


def _as_gmm(target: Union[Gaussian, GMM]) -> GMM:
    if isinstance(target, Gaussian):
        return GMM.from_gaussian(target)
    if isinstance(target, GMM):
        return target
    raise TypeError("target must be a Gaussian or a GMM")


def _eta_w(sched: Schedule, t_rev: float):
    s = sched.T - t_rev
    return float(sched.eta(s)), float(sched.w(s))


def gmm_score(x, t: float, gmm: Union[Gaussian, GMM], sched: Schedule):
    """Score of the noised mixture at reverse time t: grad log p_{T-t}(x).

    Accepts a single point (d,) or a batch (n, d). Responsibilities are
    log-sum-exp stabilized, so heavily noised points never underflow.
    """
    g = _as_gmm(gmm)
    eta, w = _eta_w(sched, t)
    return _ScoreCtx(g).score(x, eta, w)


def gmm_log_density(x, t: float, gmm: Union[Gaussian, GMM], sched: Schedule):
    """Log-density of the noised mixture at reverse time t."""
    g = _as_gmm(gmm)
    eta, w = _eta_w(sched, t)
    return _ScoreCtx(g).log_density(x, eta, w)


# ---------------------------------------------------------------------------
# Euler steps

def _drift_coeffs(sched: Schedule, t_rev: float):
    s = sched.T - t_rev
    eta = float(sched.eta(s))
    A = float(sched.deta(s)) / eta
    xi = eta * eta * 0.5 * float(sched.dw(s))
    return A, xi


def reverse_step(
    x: np.ndarray,
    k: int,
    sched: Schedule,
    alpha: float,
    score: Callable,
    gamma: float,
    noise: Optional[np.ndarray] = None,
):
    """One Euler step of the reverse SDE at t_k = k*gamma.

    x' = x + gamma [ -A x + (1+alpha) xi score(x, t_k) ]
         + sqrt(2 gamma alpha xi) noise,
    with A = (d eta/dt)/eta and xi = eta^2 sigma' sigma at forward time
    T - t_k. At alpha = 0 the step is deterministic and noise may be None.
    """
    t_k = k * gamma
    A, xi = _drift_coeffs(sched, t_k)
    x = np.asarray(x, dtype=float)
    v = -A * x + ((1.0 + alpha) * xi) * np.asarray(score(x, t_k), dtype=float)
    if not np.all(np.isfinite(v)):
        raise FloatingPointError(f"non-finite drift at step k={k}")
    out = x + gamma * v
    a = alpha * xi
    if a > 0.0:
        if noise is None:
            raise ValueError("alpha > 0 requires a noise array")
        out = out + np.sqrt(2.0 * gamma * a) * np.asarray(noise, dtype=float)
    return out


def em_sample(
    target: Union[Gaussian, GMM],
    sched: Schedule,
    alpha: float,
    K: int,
    n: int,
    seed: int,
    block_size: int = 8192,
) -> SampleBatch:
    """Sample n points by K Euler steps of the reverse SDE.

    Initialization is exact: a mixture component is drawn per sample,
    then x0 ~ N(eta_T mu_j, eta_T^2 Sigma_j + (eta_T sigma_T)^2 I).
    Samples are generated in fixed-size blocks, each on its own
    counter-based substream of `seed`, so results are reproducible and
    independent of any outer parallelism. alpha = 0 chains draw no
    Brownian increments at all.
    """
    if n < 1 or K < 1:
        raise ValueError("n and K must be at least 1")
    gmm = _as_gmm(target)
    d = gmm.d
    T = sched.T
    gamma = T / K
    eta_T = float(sched.eta(T))
    sigma_T = float(sched.sigma(T))
    ctx = _ScoreCtx(gmm)

    # per-step schedule constants at forward times T - t_k
    t_fwd = T - (np.arange(K) * T) / K
    eta_k = np.asarray(sched.eta(t_fwd), dtype=float)
    A_k = np.asarray(sched.deta(t_fwd), dtype=float) / eta_k
    xi_k = eta_k * eta_k * 0.5 * np.asarray(sched.dw(t_fwd), dtype=float)
    w_k = np.asarray(sched.w(t_fwd), dtype=float)
    if np.any(alpha * xi_k < 0.0):
        raise ValueError("negative diffusion coefficient along the path")

    chols = np.linalg.cholesky(gmm.covs)
    cum_w = np.cumsum(gmm.weights)
    blocks = []
    n_blocks = (n + block_size - 1) // block_size
    for ib in range(n_blocks):
        size = min(block_size, n - ib * block_size)
        gen = substream(seed, ib)
        u = gen.random(size)
        comp = np.searchsorted(cum_w, u, side="right")
        comp = np.minimum(comp, gmm.J - 1)
        z = gen.standard_normal((size, d))
        zeta = gen.standard_normal((size, d))
        x = eta_T * (
            gmm.means[comp]
            + np.einsum("nab,nb->na", chols[comp], z)
            + sigma_T * zeta
        )
        for k in range(K):
            sc = ctx.score(x, eta_k[k], w_k[k])
            v = -A_k[k] * x + ((1.0 + alpha) * xi_k[k]) * sc
            x = x + gamma * v
            a = alpha * xi_k[k]
            if a > 0.0:
                x = x + np.sqrt(2.0 * gamma * a) * gen.standard_normal((size, d))
            if not np.all(np.isfinite(x)):
                raise FloatingPointError(f"non-finite trajectory at step k={k}")
        blocks.append(x)
    xs = np.concatenate(blocks, axis=0)
    desc: Union[dict, str]
    try:
        desc = sched.to_json()
    except ValueError:
        desc = f"<{sched.family}>"
    return SampleBatch(
        x=xs,
        seed=int(seed),
        config=DiffusionConfig(alpha=float(alpha), K=int(K)),
        sched_desc=desc,
        block_size=int(block_size),
    )


def power_law_gmm(
    d: int,
    n_centers: int,
    p: float,
    lam_max: float = 1.0,
    seed: int = 0,
    scatter_frac: float = 0.5,
) -> GMM:
    """Shared-covariance mixture whose overall moments are exact.

    The mixture mean is zero and the mixture covariance is exactly
    diag(lam_max * i^{-p}). Centers are drawn i.i.d. normal in the leading
    n_centers - 1 coordinates, then recentered and recolored so their
    scatter equals scatter_frac of the target variance there; the shared
    component covariance absorbs the remainder and stays diagonal.
    """
    if n_centers < 2:
        raise ValueError("need at least 2 centers")
    if not 0.0 < scatter_frac < 1.0:
        raise ValueError("scatter_frac must lie in (0, 1)")
    m = n_centers - 1
    if m > d:
        raise ValueError("need n_centers - 1 <= d")
    lam = lam_max * np.arange(1, d + 1, dtype=float) ** (-p)
    gen = np.random.default_rng(np.random.Philox(key=seed))
    w = np.full(n_centers, 1.0 / n_centers)
    B = gen.standard_normal((n_centers, m))
    B -= w @ B
    scatter = (B * w[:, None]).T @ B
    evals, evecs = np.linalg.eigh(scatter)
    if evals.min() <= 1e-12 * evals.max():
        raise ValueError("degenerate center scatter; try another seed")
    white = evecs @ np.diag(evals**-0.5) @ evecs.T
    B = B @ white * np.sqrt(scatter_frac * lam[:m])
    means = np.zeros((n_centers, d))
    means[:, :m] = B
    shared = lam.copy()
    shared[:m] -= scatter_frac * lam[:m]
    covs = np.broadcast_to(np.diag(shared), (n_centers, d, d)).copy()
    return GMM(weights=w, means=means, covs=covs)
