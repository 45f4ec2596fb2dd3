"""Independent verification routes used by the test suite.

Everything here recomputes quantities the library also computes, but
through different machinery: mpmath tanh-sinh quadrature instead of
QUADPACK, gamma-function Beta values instead of log-gamma, dense matrix
square roots instead of the eigen route, and substituted integral forms
with finite truncation instead of the time-domain integrands. Agreement
between the two routes is the point of the tests that import this.
"""

from __future__ import annotations

import math

import mpmath as mp
import numpy as np
from scipy.linalg import sqrtm


# ---------------------------------------------------------------------------
# special functions


def beta_fn(a: float, b: float) -> float:
    """Euler Beta via the Gamma product."""
    return float(mp.gamma(a) * mp.gamma(b) / mp.gamma(a + b))


def c1_ref(beta: float) -> float:
    return beta * beta_fn(2.0 - 1.0 / (2.0 * beta), 1.0 + 1.0 / (2.0 * beta))


def c2_ref(beta: float) -> float:
    return beta ** 2 * beta_fn(3.0 - 1.0 / beta, 1.0 + 1.0 / beta)


# ---------------------------------------------------------------------------
# closed forms, written out by hand


def fm_sigma1_ref(lam: float, T: float) -> float:
    return -(lam / T + (1.0 + lam) * math.sqrt(lam) * math.pi / (4.0 * T))


def ve_sigma1_ref(lam: float, alpha: float, beta: float, sigma_max: float,
                  T: float) -> float:
    return ((alpha ** 2 - 1.0) * beta / (2.0 * T)
            * lam ** (1.0 - 1.0 / (2.0 * beta))
            * beta_fn(2.0 - 1.0 / (2.0 * beta), alpha + 1.0 / (2.0 * beta))
            * sigma_max ** (1.0 / beta))


def ve_sigma2_alpha1_ref(lam: float, beta: float, sigma_max: float,
                         T: float) -> float:
    return c2_ref(beta) * (lam / T ** 2) * (sigma_max ** 2 / lam) ** (1.0 / beta)


# ---------------------------------------------------------------------------
# dense-matrix Frechet distance


def frechet_sqrtm(mu_a, Sa, mu_b, Sb) -> float:
    """Squared Frechet distance via scipy.linalg.sqrtm, no eigensolver."""
    mu_a = np.atleast_1d(np.asarray(mu_a, dtype=float))
    mu_b = np.atleast_1d(np.asarray(mu_b, dtype=float))
    Sa = np.atleast_2d(np.asarray(Sa, dtype=float))
    Sb = np.atleast_2d(np.asarray(Sb, dtype=float))
    ra = sqrtm(Sa)
    cross = sqrtm(ra @ Sb @ ra)
    bures = np.trace(Sa) + np.trace(Sb) - 2.0 * np.real(np.trace(cross))
    return float(np.sum((mu_a - mu_b) ** 2) + np.real(bures))


# ---------------------------------------------------------------------------
# time-domain defect integrals by tanh-sinh quadrature
#
# The scalar fields of a schedule, per eigenvalue lam:
#   A = eta'/eta, B = w'/(2(lam+w)), N = lam/(lam+w), Q = A + (1+alpha)B
# First-order coefficients, integrated over [0, T]:
#   mean:  -1/2 N^((1+alpha)/2) (A' + A^2)          plus bracket -1/2 N^.. A
#   cov:   -lam N^alpha (A' + B' + 2(A+B)^2 - Q^2)  plus bracket -lam N^a (A+B)
# The "drop" forms fold the brackets in by parts:
#   mean:  -1/2 N^((1+alpha)/2) A (A + (1+alpha)B)
#   cov:   -lam N^alpha ((A+B)^2 - alpha^2 B^2)


def _fields(sched, lam, t):
    w = sched.w(t)
    dw = sched.dw(t)
    d2w = sched.d2w(t)
    eta = sched.eta(t)
    deta = sched.deta(t)
    d2eta = sched.d2eta(t)
    A = deta / eta
    Adot = d2eta / eta - A ** 2
    B = dw / (2.0 * (lam + w))
    Bdot = d2w / (2.0 * (lam + w)) - dw ** 2 / (2.0 * (lam + w) ** 2)
    N = lam / (lam + w)
    return A, Adot, B, Bdot, N


def mp_mu1_drop(sched, lam, alpha, T=None):
    T = sched.T if T is None else T

    def f(t):
        A, _, B, _, N = _fields(sched, lam, float(t))
        return -0.5 * N ** ((1.0 + alpha) / 2.0) * A * (A + (1.0 + alpha) * B)

    return float(mp.quad(f, [0.0, T]))


def mp_sigma1_drop(sched, lam, alpha, T=None):
    T = sched.T if T is None else T

    def f(t):
        A, _, B, _, N = _fields(sched, lam, float(t))
        return -lam * N ** alpha * ((A + B) ** 2 - alpha ** 2 * B ** 2)

    return float(mp.quad(f, [0.0, T]))


def mp_mu1_exact(sched, lam, alpha, T=None):
    T = sched.T if T is None else T

    def f(t):
        A, Adot, _, _, N = _fields(sched, lam, float(t))
        return -0.5 * N ** ((1.0 + alpha) / 2.0) * (Adot + A ** 2)

    return float(mp.quad(f, [0.0, T]))


def mp_sigma1_exact(sched, lam, alpha, T=None):
    T = sched.T if T is None else T

    def f(t):
        A, Adot, B, Bdot, N = _fields(sched, lam, float(t))
        Q = A + (1.0 + alpha) * B
        return -lam * N ** alpha * (Adot + Bdot + 2.0 * (A + B) ** 2 - Q ** 2)

    return float(mp.quad(f, [0.0, T]))


def omega_mu(sched, lam, alpha, t) -> float:
    A, _, _, _, N = _fields(sched, lam, t)
    return -0.5 * N ** ((1.0 + alpha) / 2.0) * A


def omega_sigma(sched, lam, alpha, t) -> float:
    A, _, B, _, N = _fields(sched, lam, t)
    return -lam * N ** alpha * (A + B)


# ---------------------------------------------------------------------------
# VP polynomial first order via the u = sigma_t^2 substitution
#
# With w = sigma_max^2 (t/T)^(2 beta) and eta = (1+w)^(-1/2), both drop-form
# integrals transform to finite integrals over u in (0, sigma_max^2], using
# w' = (2 beta / T) sigma_max^(1/beta) u^(1 - 1/(2 beta)). Same truncation as
# the time-domain integral, so agreement should be near machine precision.


def vp_mu1_u(lam: float, beta: float, sigma_max: float, T: float) -> float:
    pw = 1.0 - 1.0 / (2.0 * beta)

    def f(u):
        u = float(u)
        return u ** pw / ((1.0 + u) ** 2 * (lam + u) ** 1.5)

    pref = beta * (1.0 - lam) * sigma_max ** (1.0 / beta) * math.sqrt(lam) / (4.0 * T)
    return pref * float(mp.quad(f, [0.0, sigma_max ** 2]))


def vp_sigma1_u(lam: float, beta: float, sigma_max: float, T: float) -> float:
    pw = 1.0 - 1.0 / (2.0 * beta)

    def f(u):
        u = float(u)
        return u ** pw / ((lam + u) ** 2 * (1.0 + u) ** 2)

    pref = -beta * lam * (1.0 - lam) ** 2 * sigma_max ** (1.0 / beta) / (2.0 * T)
    return pref * float(mp.quad(f, [0.0, sigma_max ** 2]))


# ---------------------------------------------------------------------------
# brute-force scalar rescale objective


def g_raw(z) -> float:
    """((z+1)/(z-1) log z - 2)^2 evaluated in 40-digit arithmetic."""
    with mp.workdps(40):
        z = mp.mpf(z)
        if z == 1:
            return 0.0
        return float(((z + 1) / (z - 1) * mp.log(z) - 2) ** 2)


def psi_brute(tau: float, p: float, d: int) -> float:
    return sum(i ** (-p) * g_raw(tau * i ** p) for i in range(1, d + 1))


# ---------------------------------------------------------------------------
# misc


def loglog_slope(x, y) -> float:
    x = np.log(np.asarray(x, dtype=float))
    y = np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(x, y, 1)[0])
