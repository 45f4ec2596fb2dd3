"""How the per-step discretization error of an Euler chain is predicted.

The exact affine-drift recursion gives the terminal variance of the chain
at any step size gamma with no Monte-Carlo noise. This script shows that
(C_K - lam) / gamma converges to the first-order defect coefficient from
quadrature at rate gamma, and that the remaining gap is the second-order
coefficient.
"""
import numpy as np

from ddlab import defect_sigma_1, defect_sigma_2, discrete_moments, make_schedule

sched = make_schedule("vp", beta=5.0, sigma_max=80.0)
lam, alpha = 2.0, 0.25

d1 = defect_sigma_1(lam, sched, alpha)
d2 = defect_sigma_2(lam, sched, alpha)
print(f"vp(beta=5, sigma_max=80), lam={lam}, alpha={alpha}")
print(f"first-order coefficient  {d1:+.8f}")
print(f"second-order coefficient {d2:+.8f}")
print()
print(f"{'gamma':>10s} {'(C_K-lam)/gamma':>16s} {'resid':>12s} {'resid/gamma':>12s}")
for gamma in (1e-2, 1e-3, 1e-4, 1e-5):
    K = round(sched.T / gamma)
    path = discrete_moments(lam, 1.0, sched, alpha, K)
    rate = (path.C[-1] - lam) / path.gamma
    resid = rate - d1
    print(f"{path.gamma:10.1e} {rate:16.8f} {resid:+12.3e} {resid / path.gamma:+12.5f}")
print()
print("resid/gamma approaches the second-order coefficient above.")

# the same agreement, extracted by a Richardson fit instead of one gamma
from ddlab import richardson_defects

rd = richardson_defects(lam, 1.0, sched, alpha)
print(f"Richardson fit: sigma1 {rd.sigma1:+.8f}  sigma2 {rd.sigma2:+.6f}")
print(f"quadrature:     sigma1 {d1:+.8f}  sigma2 {d2:+.6f}")
