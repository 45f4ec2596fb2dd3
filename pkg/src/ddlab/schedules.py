"""Forward noise schedules and their per-eigenvalue coefficient fields.

A schedule is the pair (eta_t, sigma_t) on [0, T] driving the forward
process whose marginal at time t has mean eta_t * mu and covariance
eta_t^2 (Sigma + sigma_t^2 Id). Everything downstream (defect integrals,
the affine-drift recursions, the samplers) consumes schedules through
the scalar fields

    A = eta'/eta,   B = sigma sigma' / (lam + sigma^2),
    N = lam / (lam + sigma^2),   Q = A + (1+alpha) B,
    xi = eta^2 sigma sigma',

so the internal representation stores w = sigma^2 and eta together with
their first three time derivatives. Working with w instead of sigma
keeps every coefficient finite at t = 0 even for the square-root-like
schedules where sigma' itself diverges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "Schedule",
    "ScheduleCoeffs",
    "DiffusionConfig",
    "AssumptionReport",
    "make_schedule",
    "coeffs",
    "check_assumption",
    "time_change",
]

ArrayLike = "float | np.ndarray"


# ---------------------------------------------------------------------------
# core containers


@dataclass(frozen=True)
class Schedule:
    """Noise schedule (eta_t, sigma_t) on [0, T].

    The sigma leg is stored through w = sigma^2 and its time derivatives;
    the eta leg is stored directly. All evaluators are vectorized and raise
    on arguments outside [0, T] (up to a small tolerance).

    Attributes
    ----------
    family : str
        One of "ve", "vp", "fm", "rescaled", "sigma_star_ve",
        "sigma_star_vp", "custom", "time_change".
    params : dict
        Constructor parameters; empty for non-serializable families.
    T : float
        Horizon. Evaluations are restricted to [0, T].
    approx_derivatives : bool
        True when second or third derivatives come from finite
        differences rather than analytic formulas.
    """

    family: str
    params: dict
    T: float
    _w: Callable = field(repr=False)
    _dw: Callable = field(repr=False)
    _d2w: Callable = field(repr=False)
    _d3w: Callable = field(repr=False)
    _eta: Callable = field(repr=False)
    _deta: Callable = field(repr=False)
    _d2eta: Callable = field(repr=False)
    _d3eta: Callable = field(repr=False)
    approx_derivatives: bool = False

    # -- time validation ----------------------------------------------------

    def _t(self, t) -> np.ndarray:
        arr = np.asarray(t, dtype=float)
        tol = 1e-9 * max(self.T, 1.0)
        if np.any(arr < -tol) or np.any(arr > self.T + tol):
            raise ValueError(
                f"time outside schedule domain [0, {self.T!r}]: "
                f"range [{arr.min()!r}, {arr.max()!r}]"
            )
        return np.clip(arr, 0.0, self.T)

    # -- sigma^2 leg ---------------------------------------------------------

    def w(self, t):
        """sigma_t^2."""
        return self._w(self._t(t))

    def dw(self, t):
        """d/dt sigma_t^2 = 2 sigma sigma'."""
        return self._dw(self._t(t))

    def d2w(self, t):
        return self._d2w(self._t(t))

    def d3w(self, t):
        return self._d3w(self._t(t))

    # -- eta leg --------------------------------------------------------------

    def eta(self, t):
        return self._eta(self._t(t))

    def deta(self, t):
        return self._deta(self._t(t))

    def d2eta(self, t):
        return self._d2eta(self._t(t))

    def d3eta(self, t):
        return self._d3eta(self._t(t))

    # -- sigma and derivatives (derived from w) -------------------------------

    def sigma(self, t):
        return np.sqrt(self._w(self._t(t)))

    def dsigma(self, t):
        """sigma'_t. At points where sigma = 0 the limit is used when it
        exists (w ~ c t^2 gives sigma' -> sqrt(w''/2)); a square-root
        touchdown (w ~ c t) yields inf."""
        t = self._t(t)
        w = self._w(t)
        scalar = np.ndim(w) == 0
        w = np.atleast_1d(np.asarray(w, dtype=float))
        t1 = np.atleast_1d(t)
        out = np.empty_like(w)
        pos = w > 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            out[pos] = 0.5 * np.atleast_1d(self._dw(t1))[pos] / np.sqrt(w[pos])
        if np.any(~pos):
            dw0 = np.atleast_1d(self._dw(t1))[~pos]
            d2w0 = np.atleast_1d(self._d2w(t1))[~pos]
            lim = np.where(dw0 > 0.0, np.inf, np.sqrt(np.maximum(d2w0, 0.0) / 2.0))
            out[~pos] = lim
        return out[0] if scalar else out

    def d2sigma(self, t):
        t = self._t(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.sqrt(self._w(t))
            ds = 0.5 * self._dw(t) / s
            return (self._d2w(t) - 2.0 * ds * ds) / (2.0 * s)

    def d3sigma(self, t):
        t = self._t(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.sqrt(self._w(t))
            ds = 0.5 * self._dw(t) / s
            d2s = (self._d2w(t) - 2.0 * ds * ds) / (2.0 * s)
            return (self._d3w(t) - 6.0 * ds * d2s) / (2.0 * s)

    # -- endpoints -------------------------------------------------------------

    @property
    def sigma_T(self) -> float:
        return float(np.sqrt(self._w(np.asarray(self.T))))

    @property
    def eta_T(self) -> float:
        return float(self._eta(np.asarray(self.T)))

    # -- serialization ----------------------------------------------------------

    def to_json(self) -> dict:
        if self.family in ("custom", "time_change"):
            raise ValueError(f"{self.family} schedules are not serializable")
        return {"family": self.family, **self.params}

    @staticmethod
    def from_json(data: dict) -> "Schedule":
        data = dict(data)
        family = data.pop("family")
        return make_schedule(family, **data)


@dataclass(frozen=True)
class ScheduleCoeffs:
    """Coefficient fields at requested times for one eigenvalue.

    A = eta'/eta, B = sigma sigma'/(lam + sigma^2), N = lam/(lam + sigma^2),
    Q = A + (1+alpha) B, xi = eta^2 sigma sigma'. Entries are arrays
    matching the time argument's shape.
    """

    A: np.ndarray
    B: np.ndarray
    N: np.ndarray
    Q: np.ndarray
    xi: np.ndarray


@dataclass(frozen=True)
class DiffusionConfig:
    """Sampler-side parameters shared by the theory and the simulators.

    alpha is the diffusion-term exponent of the reverse process (0 gives
    the probability-flow limit), K the number of Euler steps, and
    boundary_policy selects whether defect formulas keep their endpoint
    bracket terms ("exact_brackets") or drop them ("large_sigma_drop").
    """

    alpha: float = 0.0
    K: int = 100
    boundary_policy: str = "exact_brackets"

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.boundary_policy not in ("exact_brackets", "large_sigma_drop"):
            raise ValueError(f"unknown boundary_policy {self.boundary_policy!r}")

    def gamma(self, T: float) -> float:
        return T / self.K


@dataclass(frozen=True)
class AssumptionReport:
    """Result of the schedule regularity check.

    holds_basic covers continuity/positivity on a grid plus eta_0 = 1 and
    sigma_0 = 0. holds_vanishing covers the optional small-time and
    large-sigma_T conditions: eta'/eta -> 0 and eta^2 sigma sigma' -> 0 at
    t -> 0, and the two sigma_T-scaling quantities

        q1 = sigma_T^{-(1+alpha)} |eta'_T/eta_T|,
        q2 = sigma_T^{-2 alpha} |eta'_T/eta_T + sigma'_T/sigma_T|

    tending to zero as sigma_T grows. q1_trend/q2_trend hold the values at
    the schedule's own sigma_max scaled by 1, 10, 100 when the family
    supports rescaling (None otherwise, and holds_vanishing then reflects
    only the small-time conditions and single-point values).
    """

    holds_basic: bool
    holds_vanishing: Optional[bool]
    eta0: float
    sigma0: float
    beta_limit: float
    xi_limit: float
    q1: float
    q2: float
    q1_trend: Optional[tuple]
    q2_trend: Optional[tuple]
    notes: str = ""


# ---------------------------------------------------------------------------
# family constructors


def _poly_w(sigma_max: float, beta: float, T: float):
    sm2 = sigma_max * sigma_max
    b = float(beta)

    def w(t):
        return sm2 * (t / T) ** (2 * b)

    def dw(t):
        return sm2 * (2 * b / T) * (t / T) ** (2 * b - 1)

    def d2w(t):
        with np.errstate(divide="ignore", invalid="ignore"):
            v = sm2 * (2 * b * (2 * b - 1) / T**2) * (t / T) ** (2 * b - 2)
        return _finite_at_zero(t, v, 2 * b - 2, sm2 * 2 * b * (2 * b - 1) / T**2)

    def d3w(t):
        with np.errstate(divide="ignore", invalid="ignore"):
            v = (
                sm2
                * (2 * b * (2 * b - 1) * (2 * b - 2) / T**3)
                * (t / T) ** (2 * b - 3)
            )
        return _finite_at_zero(t, v, 2 * b - 3, sm2 * 2 * b * (2 * b - 1) * (2 * b - 2) / T**3)

    return w, dw, d2w, d3w


def _finite_at_zero(t, v, exponent, coeff_at_zero):
    """Patch the t=0 value of c*(t/T)^exponent: zero for positive exponents,
    the coefficient itself at exponent 0, inf otherwise (0^negative)."""
    if np.ndim(v) == 0:
        if float(np.asarray(t)) > 0.0:
            return v
        if exponent > 0:
            return 0.0 * v
        if exponent == 0:
            return coeff_at_zero
        return np.inf * np.sign(coeff_at_zero)
    v = np.asarray(v).copy()
    at0 = np.asarray(t) <= 0.0
    if np.any(at0):
        if exponent > 0:
            v[at0] = 0.0
        elif exponent == 0:
            v[at0] = coeff_at_zero
        else:
            v[at0] = np.inf * np.sign(coeff_at_zero)
    return v


def _const_one():
    one = lambda t: np.ones_like(np.asarray(t, dtype=float))
    zero = lambda t: np.zeros_like(np.asarray(t, dtype=float))
    return one, zero, zero, zero


def _rescaled_eta(c: float, w, dw, d2w, d3w):
    """eta = sqrt(c/(c+w)) with analytic derivatives through the w leg."""
    rc = math.sqrt(c)

    def eta(t):
        return rc * (c + w(t)) ** -0.5

    def deta(t):
        return -0.5 * rc * dw(t) * (c + w(t)) ** -1.5

    def d2eta(t):
        u = c + w(t)
        return rc * (-0.5 * d2w(t) * u**-1.5 + 0.75 * dw(t) ** 2 * u**-2.5)

    def d3eta(t):
        u = c + w(t)
        return rc * (
            -0.5 * d3w(t) * u**-1.5
            + 2.25 * dw(t) * d2w(t) * u**-2.5
            - 1.875 * dw(t) ** 3 * u**-3.5
        )

    return eta, deta, d2eta, d3eta


def make_schedule(family: str, **params) -> Schedule:
    """Construct a built-in schedule family.

    Families and parameters
    -----------------------
    ve : sigma_max, beta, T=1.
        sigma = sigma_max (t/T)^beta, eta = 1. Requires beta >= 0.5.
    vp : sigma_max, beta, T=1.
        Same sigma, eta = (1 + sigma^2)^{-1/2}.
    rescaled : sigma_max, beta, c, T=1.
        Same sigma, eta = (c/(c + sigma^2))^{1/2}. vp is c = 1.
    fm : eps=1e-3, scale=1.0.
        eta = 1 - t/scale, sigma = t/(scale - t), horizon
        T = scale*(1 - eps).
    sigma_star_ve : c_sigma, alpha, sigma_max, T=1.
        Variance-exploding design making the per-eigenvalue covariance
        defect integrand vanish at lam = c_sigma for the given alpha.
    sigma_star_vp : lam, c, sigma_max, T=1.
        Rescaled-eta design cancelling the covariance defect at the
        given lam. Degenerate (every schedule cancels) when lam == c;
        that case raises.
    custom : sigma_fn, dsigma_fn, T, plus optional d2sigma_fn,
        d3sigma_fn, eta_fn, deta_fn, d2eta_fn, d3eta_fn.
        Missing higher derivatives are filled by central differences and
        flagged in approx_derivatives.
    """
    if family == "ve":
        sigma_max, beta, T = _pop(params, "sigma_max", "beta", T=1.0)
        _validate_poly(sigma_max, beta, T)
        w, dw, d2w, d3w = _poly_w(sigma_max, beta, T)
        eta, deta, d2eta, d3eta = _const_one()
        return Schedule(
            "ve", {"sigma_max": sigma_max, "beta": beta, "T": T}, T,
            w, dw, d2w, d3w, eta, deta, d2eta, d3eta,
        )

    if family == "vp":
        sigma_max, beta, T = _pop(params, "sigma_max", "beta", T=1.0)
        _validate_poly(sigma_max, beta, T)
        w, dw, d2w, d3w = _poly_w(sigma_max, beta, T)
        eta, deta, d2eta, d3eta = _rescaled_eta(1.0, w, dw, d2w, d3w)
        return Schedule(
            "vp", {"sigma_max": sigma_max, "beta": beta, "T": T}, T,
            w, dw, d2w, d3w, eta, deta, d2eta, d3eta,
        )

    if family == "rescaled":
        sigma_max, beta, c, T = _pop(params, "sigma_max", "beta", "c", T=1.0)
        _validate_poly(sigma_max, beta, T)
        if c <= 0:
            raise ValueError("c must be positive")
        w, dw, d2w, d3w = _poly_w(sigma_max, beta, T)
        eta, deta, d2eta, d3eta = _rescaled_eta(c, w, dw, d2w, d3w)
        return Schedule(
            "rescaled", {"sigma_max": sigma_max, "beta": beta, "c": c, "T": T}, T,
            w, dw, d2w, d3w, eta, deta, d2eta, d3eta,
        )

    if family == "fm":
        eps = float(params.pop("eps", 1e-3))
        scale = float(params.pop("scale", 1.0))
        _no_extra(params)
        if not 0.0 < eps < 1.0:
            raise ValueError("eps must lie in (0, 1)")
        if scale <= 0:
            raise ValueError("scale must be positive")
        S = scale
        T = S * (1.0 - eps)

        w = lambda t: (t / (S - t)) ** 2
        dw = lambda t: 2.0 * t * S / (S - t) ** 3
        d2w = lambda t: 2.0 * S * (S + 2.0 * t) / (S - t) ** 4
        d3w = lambda t: 12.0 * S * (S + t) / (S - t) ** 5
        eta = lambda t: (S - t) / S
        deta = lambda t: np.full_like(np.asarray(t, dtype=float), -1.0 / S)
        zero = lambda t: np.zeros_like(np.asarray(t, dtype=float))
        return Schedule(
            "fm", {"eps": eps, "scale": scale}, T,
            w, dw, d2w, d3w, eta, deta, zero, zero,
        )

    if family == "sigma_star_ve":
        c_sigma, alpha, sigma_max, T = _pop(
            params, "c_sigma", "alpha", "sigma_max", T=1.0
        )
        if c_sigma <= 0 or sigma_max <= 0 or T <= 0 or alpha < 0:
            raise ValueError("need c_sigma, sigma_max, T > 0 and alpha >= 0")
        q = 1.0 - 2.0 * alpha - alpha * alpha
        ratio = 1.0 + sigma_max**2 / c_sigma
        if abs(q) < 1e-12:
            # limiting branch: w = c (e^{L t/T} - 1)
            L = math.log(ratio)
            w = lambda t: c_sigma * np.expm1(L * t / T)
            dw = lambda t: c_sigma * (L / T) * np.exp(L * t / T)
            d2w = lambda t: c_sigma * (L / T) ** 2 * np.exp(L * t / T)
            d3w = lambda t: c_sigma * (L / T) ** 3 * np.exp(L * t / T)
        else:
            pmax = ratio ** (q / 2.0)
            g = (pmax - 1.0) / T
            e = 2.0 / q

            def w(t, c=c_sigma, g=g, e=e):
                return c * ((1.0 + g * t) ** e - 1.0)

            def dw(t, c=c_sigma, g=g, e=e):
                return c * e * g * (1.0 + g * t) ** (e - 1.0)

            def d2w(t, c=c_sigma, g=g, e=e):
                return c * e * (e - 1.0) * g * g * (1.0 + g * t) ** (e - 2.0)

            def d3w(t, c=c_sigma, g=g, e=e):
                return c * e * (e - 1.0) * (e - 2.0) * g**3 * (1.0 + g * t) ** (e - 3.0)

        eta, deta, d2eta, d3eta = _const_one()
        return Schedule(
            "sigma_star_ve",
            {"c_sigma": c_sigma, "alpha": alpha, "sigma_max": sigma_max, "T": T},
            T, w, dw, d2w, d3w, eta, deta, d2eta, d3eta,
        )

    if family == "sigma_star_vp":
        lam, c, sigma_max, T = _pop(params, "lam", "c", "sigma_max", T=1.0)
        if lam <= 0 or c <= 0 or sigma_max <= 0 or T <= 0:
            raise ValueError("need lam, c, sigma_max, T > 0")
        if abs(lam - c) <= 1e-12 * max(lam, c):
            raise ValueError(
                "lam == c is degenerate: the covariance defect at lam "
                "cancels for every schedule, no unique design exists"
            )
        sm2 = sigma_max**2
        zT = math.sqrt(c * (lam + sm2) / (lam * (c + sm2)))
        g = (zT - 1.0) / T

        def zfun(t):
            return 1.0 + g * np.asarray(t, dtype=float)

        def w(t):
            z = zfun(t)
            return c * lam * (1.0 - z * z) / (lam * z * z - c)

        def dw(t):
            z = zfun(t)
            return -2.0 * c * lam * (lam - c) * z * g / (lam * z * z - c) ** 2

        def d2w(t):
            z = zfun(t)
            return (
                2.0 * c * lam * (lam - c) * g * g
                * (3.0 * lam * z * z + c)
                / (lam * z * z - c) ** 3
            )

        def d3w(t):
            z = zfun(t)
            return (
                -24.0 * c * lam**2 * (lam - c) * g**3
                * z * (lam * z * z + c)
                / (lam * z * z - c) ** 4
            )

        eta, deta, d2eta, d3eta = _rescaled_eta(c, w, dw, d2w, d3w)
        return Schedule(
            "sigma_star_vp",
            {"lam": lam, "c": c, "sigma_max": sigma_max, "T": T},
            T, w, dw, d2w, d3w, eta, deta, d2eta, d3eta,
        )

    if family == "custom":
        return _custom_schedule(**params)

    raise ValueError(f"unknown schedule family {family!r}")


def _pop(params: dict, *required, **defaults):
    out = []
    for name in required:
        if name not in params:
            raise ValueError(f"missing required parameter {name!r}")
        out.append(float(params.pop(name)))
    for name, default in defaults.items():
        out.append(float(params.pop(name, default)))
    _no_extra(params)
    return out


def _no_extra(params: dict):
    if params:
        raise ValueError(f"unexpected parameters: {sorted(params)}")


def _validate_poly(sigma_max, beta, T):
    if sigma_max <= 0:
        raise ValueError("sigma_max must be positive")
    if beta < 0.5:
        raise ValueError("beta must be >= 0.5 (keeps sigma sigma' bounded at 0)")
    if T <= 0:
        raise ValueError("T must be positive")


def _fd(fn, T, order=1):
    """Central finite difference of a vectorized callable, clamped to [0, T]."""
    h = 1e-6 * T

    def d(t):
        t = np.asarray(t, dtype=float)
        lo = np.maximum(t - h, 0.0)
        hi = np.minimum(t + h, T)
        return (np.asarray(fn(hi)) - np.asarray(fn(lo))) / (hi - lo)

    if order == 1:
        return d
    return _fd(d, T, order - 1)


def _custom_schedule(
    sigma_fn=None,
    dsigma_fn=None,
    T=None,
    d2sigma_fn=None,
    d3sigma_fn=None,
    eta_fn=None,
    deta_fn=None,
    d2eta_fn=None,
    d3eta_fn=None,
):
    if sigma_fn is None or dsigma_fn is None or T is None:
        raise ValueError("custom schedules need sigma_fn, dsigma_fn and T")
    T = float(T)
    approx = False

    def w(t):
        s = np.asarray(sigma_fn(t), dtype=float)
        return s * s

    def dw(t):
        return 2.0 * np.asarray(sigma_fn(t), dtype=float) * np.asarray(
            dsigma_fn(t), dtype=float
        )

    if d2sigma_fn is not None:
        def d2w(t):
            s = np.asarray(sigma_fn(t), dtype=float)
            ds = np.asarray(dsigma_fn(t), dtype=float)
            return 2.0 * (ds * ds + s * np.asarray(d2sigma_fn(t), dtype=float))
    else:
        d2w = _fd(dw, T)
        approx = True

    if d3sigma_fn is not None and d2sigma_fn is not None:
        def d3w(t):
            s = np.asarray(sigma_fn(t), dtype=float)
            ds = np.asarray(dsigma_fn(t), dtype=float)
            d2s = np.asarray(d2sigma_fn(t), dtype=float)
            return 2.0 * (3.0 * ds * d2s + s * np.asarray(d3sigma_fn(t), dtype=float))
    else:
        d3w = _fd(d2w, T)
        approx = True

    if eta_fn is None:
        eta, deta, d2eta, d3eta = _const_one()
    else:
        eta = lambda t: np.asarray(eta_fn(t), dtype=float)
        if deta_fn is not None:
            deta = lambda t: np.asarray(deta_fn(t), dtype=float)
        else:
            deta = _fd(eta, T)
            approx = True
        if d2eta_fn is not None:
            d2eta = lambda t: np.asarray(d2eta_fn(t), dtype=float)
        else:
            d2eta = _fd(deta, T)
            approx = True
        if d3eta_fn is not None:
            d3eta = lambda t: np.asarray(d3eta_fn(t), dtype=float)
        else:
            d3eta = _fd(d2eta, T)
            approx = True

    return Schedule(
        "custom", {}, T, w, dw, d2w, d3w, eta, deta, d2eta, d3eta,
        approx_derivatives=approx,
    )


# ---------------------------------------------------------------------------
# coefficient fields


def coeffs(sched: Schedule, s, lam: float, alpha: float) -> ScheduleCoeffs:
    """Evaluate A, B, N, Q, xi at times ``s`` for eigenvalue ``lam``.

    Raises on non-finite intermediates (eta = 0 or lam + sigma^2 = 0).
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    t = np.asarray(s, dtype=float)
    b = _coeff_bundle(sched, t, lam)
    if not (np.all(np.isfinite(b["A"])) and np.all(np.isfinite(b["B"]))):
        raise ValueError("non-finite coefficient encountered (domain error)")
    Q = b["A"] + (1.0 + alpha) * b["B"]
    return ScheduleCoeffs(A=b["A"], B=b["B"], N=b["N"], Q=Q, xi=b["xi"])


def _coeff_bundle(sched: Schedule, t: np.ndarray, lam: float) -> dict:
    """A, dA, d2A, B, dB, d2B, N, xi, eta arrays for internal consumers.

    Built entirely from the w and eta legs so no term divides by sigma.
    """
    t = np.asarray(t, dtype=float)
    w = np.asarray(sched.w(t), dtype=float)
    dw = np.asarray(sched.dw(t), dtype=float)
    d2w = np.asarray(sched.d2w(t), dtype=float)
    d3w = np.asarray(sched.d3w(t), dtype=float)
    eta = np.asarray(sched.eta(t), dtype=float)
    deta = np.asarray(sched.deta(t), dtype=float)
    d2eta = np.asarray(sched.d2eta(t), dtype=float)
    d3eta = np.asarray(sched.d3eta(t), dtype=float)

    if np.any(eta == 0.0):
        raise ValueError("eta vanishes inside the schedule domain")
    den = lam + w
    if np.any(den <= 0.0):
        raise ValueError("lam + sigma^2 must stay positive")

    A = deta / eta
    r2 = d2eta / eta
    dA = r2 - A * A
    d2A = d3eta / eta - 3.0 * A * r2 + 2.0 * A**3

    B = 0.5 * dw / den
    dB = 0.5 * d2w / den - 2.0 * B * B
    d2B = 0.5 * d3w / den - 6.0 * B * dB - 4.0 * B**3

    N = lam / den
    xi = 0.5 * eta * eta * dw
    return {
        "A": A, "dA": dA, "d2A": d2A,
        "B": B, "dB": dB, "d2B": d2B,
        "N": N, "xi": xi, "eta": eta, "w": w,
    }


# ---------------------------------------------------------------------------
# regularity check


def check_assumption(sched: Schedule, alpha: float) -> AssumptionReport:
    """Check the schedule regularity conditions used by the defect theory.

    Basic part: eta continuous and positive, sigma continuous and
    nonnegative on a dense grid, eta_0 = 1, sigma_0 = 0. Vanishing part:
    eta'/eta and eta^2 sigma sigma' tend to 0 at t -> 0, and the two
    sigma_T-scaling quantities (see AssumptionReport) tend to 0 as the
    terminal noise grows. The trend is probed by rebuilding the family
    at 10x and 100x its terminal sigma where that is meaningful.
    """
    T = sched.T
    grid = np.linspace(0.0, T, 513)
    eta = np.asarray(sched.eta(grid))
    w = np.asarray(sched.w(grid))
    eta0 = float(eta[0])
    sigma0 = float(np.sqrt(max(w[0], 0.0)))
    holds_basic = (
        bool(np.all(np.isfinite(eta)))
        and bool(np.all(eta > 0.0))
        and bool(np.all(np.isfinite(w)))
        and bool(np.all(w >= -1e-12))
        and abs(eta0 - 1.0) < 1e-9
        and sigma0 < 1e-9
    )

    # small-time limits of beta_t = eta'/eta and xi_t = eta^2 sigma sigma'
    ts = T * 10.0 ** np.arange(-5.0, -9.0, -1.0)
    beta_vals = np.asarray(sched.deta(ts)) / np.asarray(sched.eta(ts))
    xi_vals = 0.5 * np.asarray(sched.eta(ts)) ** 2 * np.asarray(sched.dw(ts))
    beta_limit = float(beta_vals[-1])
    xi_limit = float(xi_vals[-1])

    def terminal_quantities(s: Schedule) -> tuple:
        sT = s.sigma_T
        AT = float(np.asarray(s.deta(s.T)) / np.asarray(s.eta(s.T)))
        rT = float(0.5 * np.asarray(s.dw(s.T)) / np.asarray(s.w(s.T)))  # sigma'/sigma
        q1 = sT ** -(1.0 + alpha) * abs(AT)
        q2 = sT ** (-2.0 * alpha) * abs(AT + rT)
        return q1, q2

    q1, q2 = terminal_quantities(sched)

    q1_trend = q2_trend = None
    scalable = sched.family in ("ve", "vp", "rescaled", "fm", "sigma_star_ve", "sigma_star_vp")
    if scalable:
        qs1, qs2 = [q1], [q2]
        for factor in (10.0, 100.0):
            p = dict(sched.params)
            if sched.family == "fm":
                p["eps"] = p["eps"] / factor
            else:
                p["sigma_max"] = p["sigma_max"] * factor
            s2 = make_schedule(sched.family, **p)
            a, b = terminal_quantities(s2)
            qs1.append(a)
            qs2.append(b)
        q1_trend, q2_trend = tuple(qs1), tuple(qs2)

    small_ok = abs(beta_limit) < 1e-6 and abs(xi_limit) < 1e-6
    if scalable:
        def decays(seq):
            if seq[0] == 0.0:
                return True
            return seq[2] < 0.2 * seq[0] or seq[2] < 1e-12
        holds_vanishing = bool(small_ok and decays(q1_trend) and decays(q2_trend))
    elif small_ok and q1 < 1e-9 and q2 < 1e-9:
        holds_vanishing = True
    else:
        holds_vanishing = None

    notes = []
    if not small_ok:
        notes.append(
            f"small-time limits nonzero: eta'/eta -> {beta_limit:.3g}, "
            f"eta^2 sigma sigma' -> {xi_limit:.3g}"
        )
    if q1_trend is not None and not (q1_trend[2] < 0.2 * q1_trend[0] or q1_trend[0] == 0.0 or q1_trend[2] < 1e-12):
        notes.append(f"q1 does not decay under terminal-noise scaling: {q1_trend}")
    if q2_trend is not None and not (q2_trend[2] < 0.2 * q2_trend[0] or q2_trend[0] == 0.0 or q2_trend[2] < 1e-12):
        notes.append(f"q2 does not decay under terminal-noise scaling: {q2_trend}")

    return AssumptionReport(
        holds_basic=holds_basic,
        holds_vanishing=holds_vanishing,
        eta0=eta0,
        sigma0=sigma0,
        beta_limit=beta_limit,
        xi_limit=xi_limit,
        q1=q1,
        q2=q2,
        q1_trend=q1_trend,
        q2_trend=q2_trend,
        notes="; ".join(notes),
    )


# ---------------------------------------------------------------------------
# time reparametrization


def time_change(
    sched: Schedule,
    phi: Callable,
    S: float,
    dphi: Optional[Callable] = None,
    d2phi: Optional[Callable] = None,
    d3phi: Optional[Callable] = None,
) -> Schedule:
    """Reparametrize a schedule by an increasing clock phi: [0, S] -> [0, T].

    The new schedule lives on [0, S] and evaluates the old one at
    psi(u) = T - phi(S - u), which preserves the family of forward
    marginals: the new marginal at remaining time S - u equals the old
    marginal at remaining time T - phi(S - u). Running constant-step
    Euler on the new schedule is the same as running variable-step Euler
    with steps phi'(.) gamma on the original.

    phi must satisfy phi(0) = 0, phi(S) = T, and be strictly increasing.
    Derivatives of phi may be supplied; missing ones are approximated by
    central differences and flagged in approx_derivatives.
    """
    S = float(S)
    if S <= 0:
        raise ValueError("S must be positive")
    T = sched.T
    grid = np.linspace(0.0, S, 257)
    vals = np.asarray(phi(grid), dtype=float)
    if abs(vals[0]) > 1e-9 * T or abs(vals[-1] - T) > 1e-9 * max(T, 1.0):
        raise ValueError("phi must map [0, S] onto [0, T]")
    if np.any(np.diff(vals) <= 0.0):
        raise ValueError("phi must be strictly increasing")

    approx = sched.approx_derivatives
    if dphi is None:
        dphi = _fd(phi, S)
        approx = True
    if d2phi is None:
        d2phi = _fd(dphi, S)
        approx = True
    if d3phi is None:
        d3phi = _fd(d2phi, S)
        approx = True

    def psi(u):
        u = np.asarray(u, dtype=float)
        return np.clip(T - np.asarray(phi(S - u), dtype=float), 0.0, T)

    dpsi = lambda u: np.asarray(dphi(S - np.asarray(u, dtype=float)), dtype=float)
    d2psi = lambda u: -np.asarray(d2phi(S - np.asarray(u, dtype=float)), dtype=float)
    d3psi = lambda u: np.asarray(d3phi(S - np.asarray(u, dtype=float)), dtype=float)

    def compose(f, df, d2f, d3f):
        g = lambda u: f(psi(u))
        dg = lambda u: df(psi(u)) * dpsi(u)
        d2g = lambda u: d2f(psi(u)) * dpsi(u) ** 2 + df(psi(u)) * d2psi(u)

        def d3g(u):
            p, p1, p2, p3 = psi(u), dpsi(u), d2psi(u), d3psi(u)
            return d3f(p) * p1**3 + 3.0 * d2f(p) * p1 * p2 + df(p) * p3

        return g, dg, d2g, d3g

    w, dw, d2w, d3w = compose(sched._w, sched._dw, sched._d2w, sched._d3w)
    eta, deta, d2eta, d3eta = compose(sched._eta, sched._deta, sched._d2eta, sched._d3eta)
    return Schedule(
        "time_change", {}, S, w, dw, d2w, d3w, eta, deta, d2eta, d3eta,
        approx_derivatives=approx,
    )
