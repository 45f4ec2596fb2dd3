"""Spectral utilities: eigenbasis handling, Bures/Frechet distances,
power-law spectra.

The defect theory is diagonal in the eigenbasis of the data covariance,
so most consumers carry a Spectrum around: eigenvalues (descending),
optionally the eigenvectors and the projections of the data mean onto
them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "Spectrum",
    "PowerLawFit",
    "eigendecompose",
    "power_law_lambdas",
    "bures_sq",
    "frechet",
    "fit_powerlaw",
    "project_per_eig",
]

_NEG_EIG_TOL = 1e-10


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues of a data covariance plus optional basis and mean data.

    lambdas are strictly positive and sorted descending. mean_proj holds
    u_i^T mu for the data mean mu (zeros when no mean was supplied). U, if
    present, has the eigenvectors as columns in the same order.
    """

    lambdas: np.ndarray
    U: Optional[np.ndarray] = None
    mean_proj: np.ndarray = field(default=None)  # type: ignore[assignment]
    mu: Optional[np.ndarray] = None

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        if lam.ndim != 1 or lam.size == 0:
            raise ValueError("lambdas must be a nonempty 1d array")
        if np.any(lam <= 0) or not np.all(np.isfinite(lam)):
            raise ValueError("eigenvalues must be finite and positive")
        if np.any(np.diff(lam) > 0):
            raise ValueError("eigenvalues must be sorted descending")
        object.__setattr__(self, "lambdas", lam)
        mp = self.mean_proj
        mp = np.zeros_like(lam) if mp is None else np.asarray(mp, dtype=float)
        if mp.shape != lam.shape:
            raise ValueError("mean_proj must match lambdas in shape")
        object.__setattr__(self, "mean_proj", mp)

    @property
    def d(self) -> int:
        return self.lambdas.size

    @property
    def trace(self) -> float:
        return float(self.lambdas.sum())


@dataclass(frozen=True)
class PowerLawFit:
    """Least-squares fit lambda_i ~ lam_max * i^(-p) in log-log space."""

    p: float
    lam_max: float
    residual: float
    n_used: int


def eigendecompose(Sigma: np.ndarray, mu: Optional[np.ndarray] = None) -> Spectrum:
    """Spectrum of a symmetric PSD matrix, descending eigenvalues.

    Eigenvalues in [-tol, 0] (tol = 1e-10 * lam_max) are clipped to a tiny
    positive floor; anything more negative raises.
    """
    Sigma = np.asarray(Sigma, dtype=float)
    if Sigma.ndim != 2 or Sigma.shape[0] != Sigma.shape[1]:
        raise ValueError("Sigma must be square")
    sym_gap = np.max(np.abs(Sigma - Sigma.T))
    if sym_gap > 1e-8 * max(1.0, np.max(np.abs(Sigma))):
        raise ValueError("Sigma must be symmetric")
    lam, U = np.linalg.eigh(0.5 * (Sigma + Sigma.T))
    lam = lam[::-1].copy()
    U = U[:, ::-1].copy()
    lmax = float(lam[0])
    if lmax <= 0:
        raise ValueError("Sigma must have a positive leading eigenvalue")
    floor = _NEG_EIG_TOL * lmax
    if np.any(lam < -floor):
        raise ValueError(f"Sigma has negative eigenvalue {lam.min():.3e}")
    lam = np.maximum(lam, floor)
    mean_proj = None if mu is None else U.T @ np.asarray(mu, dtype=float)
    return Spectrum(lambdas=lam, U=U, mean_proj=mean_proj, mu=None if mu is None else np.asarray(mu, dtype=float))


def power_law_lambdas(d: int, p: float, lam_max: float = 1.0) -> np.ndarray:
    """lambda_i = lam_max * i^(-p), i = 1..d."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if lam_max <= 0:
        raise ValueError("lam_max must be positive")
    i = np.arange(1, d + 1, dtype=float)
    return lam_max * i ** (-float(p))


def _sqrt_psd(S: np.ndarray) -> np.ndarray:
    lam, U = np.linalg.eigh(0.5 * (S + S.T))
    floor = -_NEG_EIG_TOL * max(1.0, abs(float(lam[-1])))
    if np.any(lam < floor):
        raise ValueError(f"matrix is not PSD (eigenvalue {lam.min():.3e})")
    lam = np.maximum(lam, 0.0)
    return (U * np.sqrt(lam)) @ U.T


def bures_sq(Sa: np.ndarray, Sb: np.ndarray) -> float:
    """Squared Bures distance tr(Sa + Sb - 2 (Sa^{1/2} Sb Sa^{1/2})^{1/2})."""
    Sa = np.atleast_2d(np.asarray(Sa, dtype=float))
    Sb = np.atleast_2d(np.asarray(Sb, dtype=float))
    if Sa.shape != Sb.shape:
        raise ValueError("covariance shapes differ")
    ra = _sqrt_psd(Sa)
    M = ra @ Sb @ ra
    ev = np.linalg.eigvalsh(0.5 * (M + M.T))
    floor = -_NEG_EIG_TOL * max(1.0, abs(float(ev[-1])))
    if np.any(ev < floor):
        raise ValueError("cross term is not PSD")
    ev = np.maximum(ev, 0.0)
    val = float(np.trace(Sa) + np.trace(Sb) - 2.0 * np.sum(np.sqrt(ev)))
    return max(val, 0.0)


def frechet(mu_a, Sa, mu_b, Sb) -> float:
    """Squared Frechet (Wasserstein-2) distance between two Gaussians."""
    mu_a = np.atleast_1d(np.asarray(mu_a, dtype=float))
    mu_b = np.atleast_1d(np.asarray(mu_b, dtype=float))
    dm = mu_a - mu_b
    return float(dm @ dm) + bures_sq(Sa, Sb)


def fit_powerlaw(lambdas: np.ndarray, cut_rel: float = 1e-8) -> PowerLawFit:
    """Fit lambda_i = lam_max * i^(-p) by least squares on logs.

    Eigenvalues below cut_rel times the largest are ignored (they are
    numerical floor noise in empirical covariances).
    """
    lam = np.asarray(lambdas, dtype=float)
    lam = lam[np.isfinite(lam)]
    if lam.size < 2:
        raise ValueError("need at least two eigenvalues")
    lmax = lam.max()
    keep = lam > cut_rel * lmax
    lam = lam[keep]
    i = np.arange(1, lambdas.size + 1, dtype=float)[keep[: lambdas.size]]
    x = np.log(i)
    y = np.log(lam)
    A = np.stack([np.ones_like(x), x], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    return PowerLawFit(
        p=float(-coef[1]),
        lam_max=float(np.exp(coef[0])),
        residual=float(np.sqrt(np.mean(resid**2))),
        n_used=int(lam.size),
    )


def project_per_eig(mean: np.ndarray, cov: np.ndarray, spectrum: Spectrum):
    """Project moments onto the spectrum's eigendirections.

    Returns (mean_proj, var) with mean_proj_i = u_i^T mean and
    var_i = u_i^T cov u_i. When the spectrum carries no basis the moments
    are assumed to already live in the eigenbasis.
    """
    mean = np.asarray(mean, dtype=float)
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    if spectrum.U is None:
        return mean.copy(), np.diag(cov).copy()
    U = spectrum.U
    m = U.T @ mean
    v = np.einsum("ij,jk,ki->i", U.T, cov, U)
    return m, v
