"""Parameter-design procedures built on the defect formulas.

Three families of designs live here: the optimal drift mixing weight
alpha as a function of stepsize (analytic power-law form and direct
minimization of the third-order Frechet expansion), the optimal
stationary-noise floor c_eta for power-law spectra via the spectral sum
Psi_p, and one-dimensional noise schedules that cancel the first-order
covariance defect at a chosen eigenvalue for the VE and VP families.

All scalar searches are golden-section in a bracket found by a coarse
scan; scale-like variables (tau, c) are searched in the log domain.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from .gaussian_theory import (
    QuadratureConfig,
    c1_constant,
    c2_constant,
    defect_sigma_1,
    defect_table,
    frechet_expansion_3,
)
from .schedules import Schedule, make_schedule
from .spectral import Spectrum

__all__ = [
    "AlphaStarResult",
    "TauStarResult",
    "alpha_star_analytic",
    "alpha_star_numeric",
    "psi_p",
    "tau_star",
    "log_convexity_margin",
    "c_eta_star",
    "c_eta_star_numeric",
    "sigma_star_ve",
    "sigma_star_vp",
]

_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class AlphaStarResult:
    """Optimal drift weight at a given stepsize.

    alpha is the minimizer, slope its derivative with respect to the
    stepsize at zero (negative: coarser steps want less injected noise).
    weights are the per-eigenvalue contributions of the analytic slope;
    the numeric route has none.
    """

    alpha: float
    slope: float
    weights: Optional[np.ndarray]
    method: str
    gamma: float
    objective: Optional[float] = None
    iterations: int = 0

    def to_json(self) -> str:
        rec = {
            "alpha": self.alpha,
            "slope": self.slope,
            "weights": None if self.weights is None else [float(w) for w in self.weights],
            "method": self.method,
            "gamma": self.gamma,
            "objective": self.objective,
            "iterations": self.iterations,
        }
        return json.dumps(rec, sort_keys=True)


@dataclass(frozen=True)
class TauStarResult:
    """Minimizer of the spectral sum Psi_p over the noise-floor ratio tau."""

    tau: float
    psi_value: float
    iterations: int
    converged: bool
    bracket: Tuple[float, float]

    def to_json(self) -> str:
        rec = {
            "tau": self.tau,
            "psi_value": self.psi_value,
            "iterations": self.iterations,
            "converged": self.converged,
            "bracket": list(self.bracket),
        }
        return json.dumps(rec, sort_keys=True)


# ---------------------------------------------------------------------------
# scalar search helpers

def _golden(f: Callable[[float], float], lo: float, hi: float, tol: float,
            max_iter: int = 400) -> Tuple[float, float, int, bool]:
    """Golden-section minimum of f on [lo, hi]. Returns (x, f(x), evals, converged)."""
    a, b = float(lo), float(hi)
    h = b - a
    if h <= tol:
        x = 0.5 * (a + b)
        return x, f(x), 1, True
    c = b - _INV_GOLDEN * h
    d = a + _INV_GOLDEN * h
    fc, fd = f(c), f(d)
    evals = 2
    converged = False
    for _ in range(max_iter):
        if b - a <= tol:
            converged = True
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_GOLDEN * (b - a)
            fd = f(d)
        evals += 1
    x = c if fc < fd else d
    fx = min(fc, fd)
    return x, fx, evals, converged


def _scan(f: Callable[[float], float], lo: float, hi: float, n: int):
    """Coarse grid scan. Returns (xs, fs, argmin index, unimodal flag)."""
    xs = np.linspace(lo, hi, n)
    fs = np.array([f(x) for x in xs])
    k = int(np.argmin(fs))
    dips = [
        i for i in range(1, n - 1)
        if fs[i] <= fs[i - 1] and fs[i] <= fs[i + 1] and (fs[i] < fs[i - 1] or fs[i] < fs[i + 1])
    ]
    return xs, fs, k, len(dips) <= 1


def _lambdas_of(spectrum) -> np.ndarray:
    if isinstance(spectrum, Spectrum):
        return spectrum.lambdas
    lam = np.asarray(spectrum, dtype=float)
    if lam.ndim != 1 or lam.size == 0 or np.any(lam <= 0):
        raise ValueError("need a nonempty 1d array of positive eigenvalues")
    return lam


def _as_spectrum(spectrum) -> Spectrum:
    if isinstance(spectrum, Spectrum):
        return spectrum
    lam = np.sort(_lambdas_of(spectrum))[::-1]
    return Spectrum(lambdas=lam)


# ---------------------------------------------------------------------------
# optimal drift weight

def alpha_star_analytic(gamma: float, spectrum, beta: float, sigma_max: float,
                        T: float = 1.0) -> AlphaStarResult:
    """Leading-order optimal drift weight for a polynomial VE schedule.

    alpha*(gamma) = 1 - gamma (sigma_max^{1/beta}/T) sum_i w_i lambda_i^{-1/(2 beta)}
    with weights w_i = (C2/C1) lambda_i^{1-1/beta} / sum_j lambda_j^{1-1/beta};
    C1, C2 are the Beta-function constants of the first- and second-order
    covariance defects in the large-sigma_max regime.
    """
    if beta <= 1:
        raise ValueError("beta must exceed 1")
    if sigma_max <= 0 or T <= 0:
        raise ValueError("sigma_max and T must be positive")
    lam = _lambdas_of(spectrum)
    base = lam ** (1.0 - 1.0 / beta)
    weights = (c2_constant(beta) / c1_constant(beta)) * base / base.sum()
    rate = (sigma_max ** (1.0 / beta) / T) * float(
        np.sum(weights * lam ** (-1.0 / (2.0 * beta)))
    )
    return AlphaStarResult(
        alpha=1.0 - gamma * rate,
        slope=-rate,
        weights=weights,
        method="analytic",
        gamma=float(gamma),
    )


def alpha_star_numeric(gamma: float, spectrum, sched: Schedule,
                       cfg: Optional[QuadratureConfig] = None,
                       bounds: Tuple[float, float] = (0.0, 2.0),
                       tol: float = 1e-6) -> AlphaStarResult:
    """Drift weight minimizing the third-order Frechet expansion.

    Golden-section over alpha in bounds; each evaluation rebuilds the
    per-eigenvalue defect table at that alpha. If the coarse scan sees
    more than one dip the grid argmin is returned with a warning.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    spec = _as_spectrum(spectrum)

    def objective(a: float) -> float:
        table = defect_table(spec.lambdas, sched, a, second_order=True, cfg=cfg)
        return frechet_expansion_3(spec, table, gamma)

    xs, fs, k, unimodal = _scan(objective, bounds[0], bounds[1], 17)
    if not unimodal:
        warnings.warn("objective is not unimodal on the scan grid; returning grid argmin")
        a = float(xs[k])
        return AlphaStarResult(a, (a - 1.0) / gamma, None, "numeric", float(gamma),
                               objective=float(fs[k]), iterations=len(xs))
    lo = xs[max(k - 1, 0)]
    hi = xs[min(k + 1, len(xs) - 1)]
    a, fa, evals, _ = _golden(objective, lo, hi, tol)
    return AlphaStarResult(float(a), (float(a) - 1.0) / gamma, None, "numeric",
                           float(gamma), objective=float(fa),
                           iterations=len(xs) + evals)


# ---------------------------------------------------------------------------
# noise-floor design via the spectral sum Psi_p

def _phi_log(x: np.ndarray) -> np.ndarray:
    """g(e^x) for g(z) = [((z+1)/(z-1)) log z - 2]^2, stable at x = 0.

    With y = x/2 this is 4 (y coth y - 1)^2; a Taylor series covers the
    removable singularity.
    """
    y = 0.5 * np.asarray(x, dtype=float)
    r = np.empty_like(y)
    small = np.abs(y) < 1e-4
    ys = y[small]
    r[small] = ys * ys / 3.0 - ys**4 / 45.0
    yb = y[~small]
    r[~small] = yb / np.tanh(yb) - 1.0
    return 4.0 * r * r


def psi_p(tau: float, p: float, d: int) -> float:
    """Spectral objective sum_{i=1}^d i^{-p} g(tau i^p) for the noise floor.

    g measures the per-direction Frechet penalty of running direction i at
    the ratio tau i^p instead of 1; g(1) = 0 by continuity.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    if d < 1:
        raise ValueError("d must be at least 1")
    i = np.arange(1, d + 1, dtype=float)
    x = math.log(tau) + p * np.log(i)
    return float(np.sum(i ** (-p) * _phi_log(x)))


def tau_star(p: float, d: int, tol: float = 1e-10) -> TauStarResult:
    """Minimize Psi_p over tau in the log domain.

    The map s -> Psi_p(e^s) is strictly convex and coercive, so a coarse
    scan plus golden section finds the unique minimizer. p = 0 makes every
    direction identical and the minimizer is exactly 1.
    """
    if p < 0:
        raise ValueError("p must be nonnegative")
    if d < 1:
        raise ValueError("d must be at least 1")
    if p == 0:
        return TauStarResult(tau=1.0, psi_value=0.0, iterations=0,
                             converged=True, bracket=(1.0, 1.0))
    i = np.arange(1, d + 1, dtype=float)
    ip = i ** (-p)
    li = p * np.log(i)

    def fobj(s: float) -> float:
        return float(np.sum(ip * _phi_log(s + li)))

    lo = -p * math.log(d) - 2.0
    hi = 2.0
    total = 0
    for _ in range(60):
        xs, fs, k, _ = _scan(fobj, lo, hi, 41)
        total += len(xs)
        if 0 < k < len(xs) - 1:
            break
        width = hi - lo
        if k == 0:
            lo -= width
        else:
            hi += width
    s, fval, evals, converged = _golden(fobj, xs[k - 1], xs[k + 1], tol)
    return TauStarResult(tau=float(math.exp(s)), psi_value=float(fval),
                         iterations=total + evals, converged=converged,
                         bracket=(float(math.exp(xs[k - 1])), float(math.exp(xs[k + 1]))))


def log_convexity_margin(p: float, d: int, n: int = 1000,
                         s_lo: Optional[float] = None,
                         s_hi: Optional[float] = None) -> float:
    """Smallest second difference of s -> Psi_p(e^s) on a uniform grid.

    A positive return certifies convexity of the log-domain objective over
    the scanned range (and hence uniqueness of the tau search's minimum).
    """
    if d < 1:
        raise ValueError("d must be at least 1")
    if s_lo is None:
        s_lo = -abs(p) * math.log(max(d, 2)) - 3.0
    if s_hi is None:
        s_hi = 3.0
    i = np.arange(1, d + 1, dtype=float)
    ip = i ** (-p)
    li = p * np.log(i)
    s = np.linspace(s_lo, s_hi, n)
    vals = np.array([np.sum(ip * _phi_log(x + li)) for x in s])
    d2 = vals[2:] - 2.0 * vals[1:-1] + vals[:-2]
    return float(d2.min())


def c_eta_star(lam_max: float, p: float, d: int) -> float:
    """Asymptotically optimal stationary-noise floor lam_max * tau*(p, d)."""
    if lam_max <= 0:
        raise ValueError("lam_max must be positive")
    return lam_max * tau_star(p, d).tau


def c_eta_star_numeric(spectrum, sched: Schedule,
                       cfg: Optional[QuadratureConfig] = None,
                       tol: float = 1e-10) -> float:
    """Noise floor minimizing the leading Frechet objective exactly.

    Minimizes c -> sum_i defect^2(lambda_i; c) / lambda_i over the
    noise-floor parameter of the rescaled family sharing sched's
    polynomial shape (zero-mean, alpha = 0 setting). The search is
    golden-section in log c over [lam_min/10, 10 lam_max].
    """
    lam = _lambdas_of(spectrum)
    params = sched.params
    if "beta" not in params or "sigma_max" not in params:
        raise ValueError("schedule must carry polynomial parameters beta and sigma_max")
    beta = params["beta"]
    sigma_max = params["sigma_max"]
    T = sched.T
    uniq, counts = np.unique(lam, return_counts=True)

    def objective(s: float) -> float:
        sc = make_schedule("rescaled", beta=beta, sigma_max=sigma_max,
                           T=T, c=math.exp(s))
        tot = 0.0
        for lam_i, cnt in zip(uniq, counts):
            dv = defect_sigma_1(lam_i, sc, alpha=0.0, cfg=cfg)
            tot += cnt * dv * dv / lam_i
        return tot

    lo = math.log(uniq[0] / 10.0)
    hi = math.log(10.0 * uniq[-1])
    xs, fs, k, unimodal = _scan(objective, lo, hi, 13)
    if not unimodal:
        warnings.warn("objective is not unimodal on the scan grid; returning grid argmin")
        return float(math.exp(xs[k]))
    s, _, _, _ = _golden(objective, xs[max(k - 1, 0)], xs[min(k + 1, len(xs) - 1)], tol)
    return float(math.exp(s))


# ---------------------------------------------------------------------------
# defect-cancelling noise schedules

def sigma_star_ve(c_sigma: float, alpha: float, sigma_max: float,
                  T: float = 1.0) -> Schedule:
    """VE-family schedule cancelling the first-order covariance defect at
    eigenvalue c_sigma, for the given drift weight alpha.

    The shape follows the exponent q = 1 - 2 alpha - alpha^2; q = 0
    (alpha = sqrt(2) - 1) switches to the exponential limiting branch.
    Endpoints are exact: sigma_0 = 0 and sigma_T = sigma_max.
    """
    return make_schedule("sigma_star_ve", c_sigma=c_sigma, alpha=alpha,
                         sigma_max=sigma_max, T=T)


def sigma_star_vp(lam: float, c: float, sigma_max: float,
                  T: float = 1.0) -> Optional[Schedule]:
    """Rescaled-family schedule (noise floor c, drift weight 0) cancelling
    the first-order covariance defect at eigenvalue lam.

    Returns None when lam == c: there the defect vanishes for every
    schedule of the family and no design is singled out.
    """
    if lam <= 0 or c <= 0:
        raise ValueError("lam and c must be positive")
    if abs(lam - c) <= 1e-12 * max(lam, c):
        warnings.warn("lam == c cancels the defect for every schedule; no unique design")
        return None
    return make_schedule("sigma_star_vp", lam=lam, c=c, sigma_max=sigma_max, T=T)
