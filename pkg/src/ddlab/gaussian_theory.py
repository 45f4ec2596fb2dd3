"""Discretization-error coefficients of the Euler reverse sampler for
Gaussian data.

Everything here is per eigendirection of the data covariance. For an
eigenvalue lam the discrete chain's terminal mean and variance satisfy

    m_hat_K  = m_exact + gamma * dmu1 * (u^T mu) + gamma^2 * dmu2 * (u^T mu) + ...
    C_hat_K  = lam + gamma * dsigma1 + gamma^2 * dsigma2 + ...

and this module computes dmu1, dsigma1 (first order), dmu2, dsigma2
(second order) by adaptive quadrature of their integral formulas, plus
closed-form specializations for particular schedule families, the
squared-Frechet error expansions assembled across a spectrum, the
initialization error of starting from the stationary Gaussian, a local
Lipschitzness objective, and the mean-collapse variance expansion.

First-order coefficients exist in two flavors controlled by
boundary_policy:

* "exact_brackets": the exact coefficient, valid at any finite terminal
  noise level. Computed from the pre-integration-by-parts integrand,
  which is equivalent to the simplified integrand plus its boundary
  bracket but numerically better behaved.
* "large_sigma_drop": the simplified integrand with the boundary bracket
  dropped. This is the large-sigma_max asymptotic form and the one the
  closed-form power-law expressions approximate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq
from scipy.special import betaln

from .schedules import Schedule, _coeff_bundle
from .spectral import Spectrum

__all__ = [
    "QuadratureConfig",
    "QuadratureError",
    "DefectTable",
    "defect_mu_1",
    "defect_sigma_1",
    "defect_mu_2",
    "defect_sigma_2",
    "boundary_term_mu",
    "boundary_term_sigma",
    "defect_table",
    "closed_form_ve_sigma1",
    "closed_form_vp_poly",
    "closed_form_fm",
    "closed_form_ve_sigma2_alpha1",
    "c1_constant",
    "c2_constant",
    "frechet_expansion_2",
    "frechet_expansion_3",
    "init_error_fd",
    "lipschitz_objective",
    "mean_collapse_vk",
]

_POLICIES = ("exact_brackets", "large_sigma_drop")


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to converge within its budget."""


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances and limits for the defect quadratures.

    open_endpoints records that integrands are only evaluated strictly
    inside (0, T); all rules used here sample interior nodes only, so
    schedules whose derivatives blow up at an endpoint stay usable.
    inner_cells controls the resolution of the precomputed antiderivative
    grid used by the second-order (nested-integral) formulas.
    """

    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_subdiv: int = 200
    open_endpoints: bool = True
    inner_cells: int = 256

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_subdiv < 10:
            raise ValueError("max_subdiv must be at least 10")
        if self.inner_cells < 8:
            raise ValueError("inner_cells must be at least 8")


_DEFAULT_CFG = QuadratureConfig()


def _check_policy(boundary_policy: str) -> None:
    if boundary_policy not in _POLICIES:
        raise ValueError(f"boundary_policy must be one of {_POLICIES}")


def _knee_points(sched: Schedule, lam: float) -> list:
    """Interior times where sigma_t^2 crosses lam or another natural scale.

    The integrands change character where the noise variance passes the
    eigenvalue (and the rescaling constant, when the family has one), so
    splitting there speeds up the adaptive rule considerably.
    """
    T = sched.T
    targets = {float(lam), 1.0}
    for key in ("c", "c_sigma", "lam"):
        val = sched.params.get(key)
        if val is not None:
            targets.add(float(val))
    tgrid = np.linspace(0.0, T, 513)[1:-1]
    wgrid = sched.w(tgrid)
    out = []
    for y in targets:
        diff = wgrid - y
        sign = np.sign(diff)
        idx = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
        for i in idx:
            try:
                root = brentq(lambda t: float(sched.w(t)) - y, tgrid[i], tgrid[i + 1])
            except ValueError:
                continue
            if 1e-12 * T < root < T * (1 - 1e-12):
                out.append(float(root))
    out.sort()
    # drop near-duplicates
    dedup = []
    for t in out:
        if not dedup or t - dedup[-1] > 1e-9 * T:
            dedup.append(t)
    return dedup


def _quad(f: Callable, a: float, b: float, cfg: QuadratureConfig, points=None):
    """quad wrapper returning (value, abserr); raises QuadratureError when
    the rule reports trouble and the error estimate is not negligible."""
    pts = None
    if points:
        pts = [p for p in points if a < p < b]
        if not pts:
            pts = None
    res = quad(
        f,
        a,
        b,
        epsabs=cfg.abs_tol,
        epsrel=cfg.rel_tol,
        limit=cfg.max_subdiv,
        full_output=1,
        points=pts,
    )
    y, err = float(res[0]), float(res[1])
    if len(res) > 3 and err > 1e-6 * max(1.0, abs(y)):
        raise QuadratureError(f"quadrature did not converge: {res[3]} (abserr={err:.2e})")
    return y, err


# ---------------------------------------------------------------------------
# first-order integrands

def _mu1_exact_integrand(sched, lam, alpha):
    p = 0.5 * (1.0 + alpha)

    def f(t):
        b = _coeff_bundle(sched, t, lam)
        return -0.5 * b["N"] ** p * (b["dA"] + b["A"] ** 2)

    return f


def _mu1_drop_integrand(sched, lam, alpha):
    p = 0.5 * (1.0 + alpha)

    def f(t):
        b = _coeff_bundle(sched, t, lam)
        A, B = b["A"], b["B"]
        return -0.5 * b["N"] ** p * A * (A + (1.0 + alpha) * B)

    return f


def _sigma1_exact_integrand(sched, lam, alpha):
    def f(t):
        b = _coeff_bundle(sched, t, lam)
        A, B = b["A"], b["B"]
        Q = A + (1.0 + alpha) * B
        core = b["dA"] + b["dB"] + 2.0 * (A + B) ** 2 - Q * Q
        return -lam * b["N"] ** alpha * core

    return f


def _sigma1_drop_integrand(sched, lam, alpha):
    def f(t):
        b = _coeff_bundle(sched, t, lam)
        A, B = b["A"], b["B"]
        return -lam * b["N"] ** alpha * ((A + B) ** 2 - (alpha * B) ** 2)

    return f


def boundary_term_mu(lam: float, sched: Schedule, alpha: float) -> float:
    """Boundary bracket of the first-order mean coefficient,
    [-1/2 N^{(1+alpha)/2} A] evaluated at T minus at 0."""
    p = 0.5 * (1.0 + alpha)

    def omega(t):
        b = _coeff_bundle(sched, t, lam)
        return -0.5 * b["N"] ** p * b["A"]

    return float(omega(sched.T) - omega(0.0))


def boundary_term_sigma(lam: float, sched: Schedule, alpha: float) -> float:
    """Boundary bracket of the first-order variance coefficient,
    [-lam N^alpha (A+B)] evaluated at T minus at 0."""

    def omega(t):
        b = _coeff_bundle(sched, t, lam)
        return -lam * b["N"] ** alpha * (b["A"] + b["B"])

    return float(omega(sched.T) - omega(0.0))


def _defect_1_with_err(lam, sched, alpha, cfg, boundary_policy, which):
    _check_policy(boundary_policy)
    if lam <= 0:
        raise ValueError("lam must be positive")
    cfg = cfg or _DEFAULT_CFG
    exact = boundary_policy == "exact_brackets"
    if which == "mu":
        f = _mu1_exact_integrand(sched, lam, alpha) if exact else _mu1_drop_integrand(sched, lam, alpha)
    else:
        f = _sigma1_exact_integrand(sched, lam, alpha) if exact else _sigma1_drop_integrand(sched, lam, alpha)
    return _quad(f, 0.0, sched.T, cfg, points=_knee_points(sched, lam))


def defect_mu_1(
    lam: float,
    sched: Schedule,
    alpha: float,
    cfg: Optional[QuadratureConfig] = None,
    boundary_policy: str = "exact_brackets",
) -> float:
    """First-order coefficient of the terminal mean error, per unit step.

    The discrete mean satisfies m_hat = m_exact + gamma * dmu1 * (u^T mu)
    + O(gamma^2). Under "exact_brackets" this is the exact coefficient;
    under "large_sigma_drop" the boundary bracket (see boundary_term_mu)
    is dropped, which is the large-sigma_max limit.
    """
    return _defect_1_with_err(lam, sched, alpha, cfg, boundary_policy, "mu")[0]


def defect_sigma_1(
    lam: float,
    sched: Schedule,
    alpha: float,
    cfg: Optional[QuadratureConfig] = None,
    boundary_policy: str = "exact_brackets",
) -> float:
    """First-order coefficient of the terminal variance error, per unit step.

    C_hat = lam + gamma * dsigma1 + O(gamma^2). Policy semantics as in
    defect_mu_1, with bracket boundary_term_sigma.
    """
    return _defect_1_with_err(lam, sched, alpha, cfg, boundary_policy, "sigma")[0]


# ---------------------------------------------------------------------------
# second-order coefficients

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(7)


def _cumulative_spline(f_vec, sched, lam, cfg):
    """Antiderivative G(s) = int_0^s f of a vectorized integrand.

    Composite 7-point Gauss-Legendre on cosine-spaced cells between knee
    points, accumulated and interpolated with a cubic spline. Returns
    (spline, total). Endpoint values of f are never requested.
    """
    T = sched.T
    seg_bounds = [0.0] + _knee_points(sched, lam) + [T]
    edges = []
    for s0, s1 in zip(seg_bounds[:-1], seg_bounds[1:]):
        j = np.arange(cfg.inner_cells + 1, dtype=float)
        e = s0 + (s1 - s0) * 0.5 * (1.0 - np.cos(np.pi * j / cfg.inner_cells))
        edges.append(e[:-1] if s1 < T else e)
    x = np.concatenate(edges)
    lo, hi = x[:-1], x[1:]
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    vals = f_vec(nodes.ravel()).reshape(nodes.shape)
    cell = half * (vals @ _GL_WEIGHTS)
    cum = np.concatenate([[0.0], np.cumsum(cell)])
    return CubicSpline(x, cum), float(cum[-1])


def _mu2_pieces(sched, lam, alpha, cfg):
    p = 0.5 * (1.0 + alpha)
    g = _mu1_exact_integrand(sched, lam, alpha)
    spline, total = _cumulative_spline(g, sched, lam, cfg)

    def f(s):
        b = _coeff_bundle(sched, s, lam)
        A, B, dA, dB = b["A"], b["B"], b["dA"], b["dB"]
        Q = A + (1.0 + alpha) * B
        dQ = dA + (1.0 + alpha) * dB
        tail = total - spline(s)
        third = b["d2A"] + 3.0 * A * dA + A**3
        return -0.5 * (dQ + Q * Q) * tail + b["N"] ** p * (
            -0.25 * Q * (dA + A * A) - third / 12.0
        )

    return f


def _sigma2_pieces(sched, lam, alpha, cfg):
    g = _sigma1_exact_integrand(sched, lam, alpha)
    spline, total = _cumulative_spline(g, sched, lam, cfg)

    def f(s):
        b = _coeff_bundle(sched, s, lam)
        A, B, dA, dB = b["A"], b["B"], b["dA"], b["dB"]
        S1, dS1, d2S1 = A + B, dA + dB, b["d2A"] + b["d2B"]
        Q = A + (1.0 + alpha) * B
        dQ = dA + (1.0 + alpha) * dB
        tail = total - spline(s)
        inner = (
            -(d2S1 + 6.0 * S1 * dS1 + 4.0 * S1**3) / 6.0
            - Q * (dS1 + 2.0 * S1 * S1)
            + Q * dQ
            + 2.0 * Q**3
            - alpha * B * Q * Q
        )
        return -(dQ + Q * Q) * tail + lam * b["N"] ** alpha * inner

    return f


def _defect_2_with_err(lam, sched, alpha, cfg, which):
    if lam <= 0:
        raise ValueError("lam must be positive")
    cfg = cfg or _DEFAULT_CFG
    pieces = _mu2_pieces if which == "mu" else _sigma2_pieces
    f = pieces(sched, lam, alpha, cfg)
    return _quad(f, 0.0, sched.T, cfg, points=_knee_points(sched, lam))


def defect_mu_2(
    lam: float,
    sched: Schedule,
    alpha: float,
    cfg: Optional[QuadratureConfig] = None,
) -> float:
    """Second-order coefficient of the terminal mean error.

    Requires eta differentiable three times and sigma^2 twice (the
    schedule's d3eta/d2w hooks). The nested inner integral is evaluated
    from a precomputed antiderivative grid.
    """
    return _defect_2_with_err(lam, sched, alpha, cfg, "mu")[0]


def defect_sigma_2(
    lam: float,
    sched: Schedule,
    alpha: float,
    cfg: Optional[QuadratureConfig] = None,
) -> float:
    """Second-order coefficient of the terminal variance error.

    Requires sigma^2 differentiable three times. Same nested-integral
    strategy as defect_mu_2.
    """
    return _defect_2_with_err(lam, sched, alpha, cfg, "sigma")[0]


# ---------------------------------------------------------------------------
# defect tables

@dataclass(frozen=True)
class DefectTable:
    """Per-eigenvalue defect coefficients with quadrature error estimates.

    mu2/sigma2 are None when the table was built first-order only. The
    err_* arrays hold the quadrature's absolute error estimates.
    """

    lambdas: np.ndarray
    mu1: np.ndarray
    sigma1: np.ndarray
    mu2: Optional[np.ndarray]
    sigma2: Optional[np.ndarray]
    err_mu1: np.ndarray
    err_sigma1: np.ndarray
    err_mu2: Optional[np.ndarray]
    err_sigma2: Optional[np.ndarray]
    alpha: float
    boundary_policy: str

    def __post_init__(self):
        for name in ("lambdas", "mu1", "sigma1", "mu2", "sigma2"):
            arr = getattr(self, name)
            if arr is not None and not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite entries in {name}")

    @property
    def second_order(self) -> bool:
        return self.mu2 is not None

    def to_csv(self, path) -> None:
        """Write columns lambda, d_mu1, d_mu2, d_sigma1, d_sigma2, err_*."""
        d = self.lambdas.size
        z = np.full(d, np.nan)
        cols = [
            ("lambda", self.lambdas),
            ("d_mu1", self.mu1),
            ("d_mu2", self.mu2 if self.mu2 is not None else z),
            ("d_sigma1", self.sigma1),
            ("d_sigma2", self.sigma2 if self.sigma2 is not None else z),
            ("err_mu1", self.err_mu1),
            ("err_mu2", self.err_mu2 if self.err_mu2 is not None else z),
            ("err_sigma1", self.err_sigma1),
            ("err_sigma2", self.err_sigma2 if self.err_sigma2 is not None else z),
        ]
        header = ",".join(name for name, _ in cols)
        data = np.stack([arr for _, arr in cols], axis=1)
        with open(path, "w") as fh:
            fh.write(header + "\n")
            for row in data:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")


def defect_table(
    lambdas: Union[Spectrum, Sequence[float], np.ndarray],
    sched: Schedule,
    alpha: float,
    second_order: bool = True,
    cfg: Optional[QuadratureConfig] = None,
    boundary_policy: str = "exact_brackets",
) -> DefectTable:
    """Defect coefficients for every eigenvalue of a spectrum.

    Duplicate eigenvalues are computed once and broadcast.
    """
    _check_policy(boundary_policy)
    cfg = cfg or _DEFAULT_CFG
    lam_arr = lambdas.lambdas if isinstance(lambdas, Spectrum) else np.asarray(lambdas, dtype=float)
    uniq, inv = np.unique(lam_arr, return_inverse=True)
    n = uniq.size
    m1 = np.empty(n)
    s1 = np.empty(n)
    e1m = np.empty(n)
    e1s = np.empty(n)
    m2 = np.empty(n) if second_order else None
    s2 = np.empty(n) if second_order else None
    e2m = np.empty(n) if second_order else None
    e2s = np.empty(n) if second_order else None
    for i, lam in enumerate(uniq):
        m1[i], e1m[i] = _defect_1_with_err(lam, sched, alpha, cfg, boundary_policy, "mu")
        s1[i], e1s[i] = _defect_1_with_err(lam, sched, alpha, cfg, boundary_policy, "sigma")
        if second_order:
            m2[i], e2m[i] = _defect_2_with_err(lam, sched, alpha, cfg, "mu")
            s2[i], e2s[i] = _defect_2_with_err(lam, sched, alpha, cfg, "sigma")
    return DefectTable(
        lambdas=lam_arr.copy(),
        mu1=m1[inv],
        sigma1=s1[inv],
        mu2=None if m2 is None else m2[inv],
        sigma2=None if s2 is None else s2[inv],
        err_mu1=e1m[inv],
        err_sigma1=e1s[inv],
        err_mu2=None if e2m is None else e2m[inv],
        err_sigma2=None if e2s is None else e2s[inv],
        alpha=float(alpha),
        boundary_policy=boundary_policy,
    )


# ---------------------------------------------------------------------------
# closed forms

def _beta_fn(a: float, b: float) -> float:
    if a <= 0 or b <= 0:
        raise ValueError("Beta function arguments must be positive")
    return float(np.exp(betaln(a, b)))


def c1_constant(beta: float) -> float:
    """beta * B(2 - 1/(2 beta), 1 + 1/(2 beta)); first-order power-law constant."""
    if beta <= 0.5:
        raise ValueError("beta must exceed 1/2")
    h = 1.0 / (2.0 * beta)
    return beta * _beta_fn(2.0 - h, 1.0 + h)


def c2_constant(beta: float) -> float:
    """beta^2 * B(3 - 1/beta, 1 + 1/beta); second-order power-law constant."""
    if beta <= 0.5:
        raise ValueError("beta must exceed 1/2")
    h = 1.0 / beta
    return beta * beta * _beta_fn(3.0 - h, 1.0 + h)


def closed_form_ve_sigma1(lam: float, alpha: float, beta: float, sigma_max: float, T: float) -> float:
    """Leading large-sigma_max variance coefficient for the constant-scale
    polynomial schedule: (alpha^2-1)(beta/2T) lam^{1-1/(2 beta)}
    B(2-1/(2 beta), alpha+1/(2 beta)) sigma_max^{1/beta}."""
    if beta <= 0.5:
        raise ValueError("beta must exceed 1/2")
    if lam <= 0 or sigma_max <= 0 or T <= 0:
        raise ValueError("lam, sigma_max, T must be positive")
    h = 1.0 / (2.0 * beta)
    if alpha + h <= 0:
        raise ValueError("alpha + 1/(2 beta) must be positive")
    return (
        (alpha * alpha - 1.0)
        * (beta / (2.0 * T))
        * lam ** (1.0 - h)
        * _beta_fn(2.0 - h, alpha + h)
        * sigma_max ** (1.0 / beta)
    )


def _vp_u_integral(lam: float, beta: float, a_pow: float, abs_tol: float) -> float:
    """int_0^inf u^{1-1/(2 beta)} / ((1+u)^2 (lam+u)^a_pow) du, truncated at U
    with the algebraic tail added from its leading asymptotic term."""
    h = 1.0 / (2.0 * beta)
    decay = a_pow + h  # tail integrand ~ u^{-(1+decay)}
    U = max(100.0, 100.0 * lam, (10.0 / (abs_tol * decay)) ** (1.0 / decay))

    def f(u):
        return u ** (1.0 - h) / ((1.0 + u) ** 2 * (lam + u) ** a_pow)

    pts = sorted({1.0, float(lam), np.sqrt(U)})
    val, _ = _quad(f, 0.0, U, _DEFAULT_CFG, points=pts)
    tail = U ** (-decay) / decay
    return val + tail


def closed_form_vp_poly(lam: float, beta: float, sigma_max: float, T: float):
    """Leading large-sigma_max (mean, variance) coefficients for the
    variance-preserving polynomial schedule at alpha = 0.

    Both carry sigma_max^{1/beta}; both vanish at lam = 1 through their
    (lam-1) prefactors.
    """
    if beta <= 0.5:
        raise ValueError("beta must exceed 1/2")
    if lam <= 0 or sigma_max <= 0 or T <= 0:
        raise ValueError("lam, sigma_max, T must be positive")
    s_pow = sigma_max ** (1.0 / beta)
    if lam == 1.0:
        return 0.0, 0.0
    i_mu = _vp_u_integral(lam, beta, 1.5, _DEFAULT_CFG.abs_tol)
    i_sg = _vp_u_integral(lam, beta, 2.0, _DEFAULT_CFG.abs_tol)
    mu = -(beta * (lam - 1.0) * np.sqrt(lam) / (4.0 * T)) * s_pow * i_mu
    sg = -(beta * (1.0 - lam) ** 2 * lam / (2.0 * T)) * s_pow * i_sg
    return float(mu), float(sg)


def closed_form_fm(lam: float, T: float) -> float:
    """Exact first-order variance coefficient of the linear-interpolation
    schedule at alpha = 0, full horizon: -(lam/T + (1+lam) sqrt(lam) pi / (4T))."""
    if lam <= 0 or T <= 0:
        raise ValueError("lam and T must be positive")
    return -(lam / T + (1.0 + lam) * np.sqrt(lam) * np.pi / (4.0 * T))


def closed_form_ve_sigma2_alpha1(lam: float, beta: float, sigma_max: float, T: float) -> float:
    """Leading second-order variance coefficient for the constant-scale
    polynomial schedule at alpha = 1: C2(beta) (lam/T^2)(sigma_max^2/lam)^{1/beta}."""
    if lam <= 0 or sigma_max <= 0 or T <= 0:
        raise ValueError("lam, sigma_max, T must be positive")
    return c2_constant(beta) * (lam / T**2) * (sigma_max**2 / lam) ** (1.0 / beta)


# ---------------------------------------------------------------------------
# assembled error expansions

def _check_table(spectrum: Spectrum, table: DefectTable, need_second: bool) -> None:
    if table.lambdas.shape != spectrum.lambdas.shape or not np.allclose(
        table.lambdas, spectrum.lambdas, rtol=1e-12, atol=0.0
    ):
        raise ValueError("defect table does not match the spectrum's eigenvalues")
    if need_second and not table.second_order:
        raise ValueError("second-order coefficients are missing from the table")


def frechet_expansion_2(spectrum: Spectrum, defects: DefectTable, gamma: float) -> float:
    """Second-order squared-Frechet error:
    gamma^2 [sum dmu1_i^2 (u_i^T mu)^2 + (1/4) sum dsigma1_i^2 / lam_i]."""
    _check_table(spectrum, defects, need_second=False)
    mp2 = spectrum.mean_proj**2
    lead = np.sum(defects.mu1**2 * mp2) + 0.25 * np.sum(defects.sigma1**2 / spectrum.lambdas)
    return float(gamma * gamma * lead)


def frechet_expansion_3(spectrum: Spectrum, defects: DefectTable, gamma: float) -> float:
    """Third-order squared-Frechet error: the second-order term plus
    gamma^3 [2 sum dmu1 dmu2 (u^T mu)^2
             + sum(dsigma1 dsigma2 / (2 lam) - dsigma1^3 / (8 lam^2))]."""
    _check_table(spectrum, defects, need_second=True)
    lam = spectrum.lambdas
    mp2 = spectrum.mean_proj**2
    e0 = np.sum(defects.mu1**2 * mp2) + 0.25 * np.sum(defects.sigma1**2 / lam)
    e1 = 2.0 * np.sum(defects.mu1 * defects.mu2 * mp2) + np.sum(
        defects.sigma1 * defects.sigma2 / (2.0 * lam) - defects.sigma1**3 / (8.0 * lam * lam)
    )
    return float(gamma**2 * e0 + gamma**3 * e1)


def init_error_fd(spectrum: Spectrum, alpha: float, sigma_T: float) -> float:
    """Squared-Frechet penalty of initializing the reverse chain at the
    stationary Gaussian instead of the exact forward terminal law.

    Per eigendirection the propagated chain ends with mean bias
    N_T^{(1+alpha)/2} (u^T mu)-scaled and variance deficit lam N_T^{1+alpha},
    so the distance is sum N_T^{1+alpha}(u^T mu)^2
    + sum (sqrt(lam) - sqrt(lam - lam N_T^{1+alpha}))^2.
    """
    if sigma_T <= 0:
        raise ValueError("sigma_T must be positive")
    lam = spectrum.lambdas
    NT = lam / (lam + sigma_T**2)
    fac = NT ** (1.0 + alpha)
    mean_term = np.sum(fac * spectrum.mean_proj**2)
    # sqrt(lam) - sqrt(lam (1-fac)) = sqrt(lam) fac / (1 + sqrt(1-fac)),
    # which stays accurate when fac underflows below machine epsilon
    cov_term = np.sum(lam * (fac / (1.0 + np.sqrt(1.0 - fac))) ** 2)
    return float(mean_term + cov_term)


def lipschitz_objective(
    sched: Schedule,
    lam_min: float,
    alpha: float = 0.0,
    cfg: Optional[QuadratureConfig] = None,
) -> float:
    """Average squared local Lipschitzness of the reverse drift along its
    most contractive spectral direction: int_0^T Q_s(lam_min)^2 ds."""
    if lam_min <= 0:
        raise ValueError("lam_min must be positive")
    cfg = cfg or _DEFAULT_CFG

    def f(t):
        b = _coeff_bundle(sched, t, lam_min)
        Q = b["A"] + (1.0 + alpha) * b["B"]
        return Q * Q

    val, _ = _quad(f, 0.0, sched.T, cfg, points=_knee_points(sched, lam_min))
    return val


def mean_collapse_vk(spectrum: Spectrum, defects: DefectTable, gamma: float) -> float:
    """Expected squared norm of the discrete sampler's output around the
    data mean: tr(Sigma) + gamma sum dsigma1
    + gamma^2 [sum dmu1^2 (u^T mu)^2 + sum dsigma2]."""
    _check_table(spectrum, defects, need_second=True)
    mp2 = spectrum.mean_proj**2
    return float(
        spectrum.trace
        + gamma * np.sum(defects.sigma1)
        + gamma**2 * (np.sum(defects.mu1**2 * mp2) + np.sum(defects.sigma2))
    )
