"""The optimal stochasticity level is 1 - O(gamma).

The drift weight alpha interpolates the reverse dynamics from the
probability-flow ODE (alpha = 0) to the standard reverse SDE (alpha = 1).
Minimizing the third-order Frechet error expansion over alpha gives a
minimizer just below 1, with slope set by a ratio of Beta-function
constants. This script compares the numeric minimizer against that rate.
"""
import numpy as np

from ddlab import QuadratureConfig, Spectrum, alpha_star_analytic, alpha_star_numeric, make_schedule

sched = make_schedule("ve", beta=5.0, sigma_max=80.0)
spectrum = Spectrum(np.array([1.0]))

analytic = alpha_star_analytic(1e-3, spectrum, beta=5.0, sigma_max=80.0)
rate = -analytic.slope
print(f"analytic rate (1 - alpha*)/gamma -> {rate:.6f}")
print()
print(f"{'gamma':>8s} {'alpha*':>12s} {'(1-alpha*)/gamma':>17s} {'dev':>8s}")
cfg = QuadratureConfig(rel_tol=1e-7)
for gamma in (2e-3, 1e-3, 5e-4, 2.5e-4):
    res = alpha_star_numeric(gamma, spectrum, sched, cfg=cfg, tol=1e-6)
    measured = (1.0 - res.alpha) / gamma
    print(f"{gamma:8.1e} {res.alpha:12.8f} {measured:17.5f} {abs(measured - rate) / rate:8.2%}")
print()
print("the measured slope drifts toward the analytic rate as gamma -> 0;")
print("the residual deviation at finite gamma is the next expansion order.")

# anisotropy: heavier spectra want more stochasticity per unit step
lams = np.array([16.0, 4.0, 1.0, 0.25])
aniso = alpha_star_analytic(1e-3, Spectrum(lams), beta=5.0, sigma_max=80.0)
print()
print(f"4-eigenvalue spectrum {lams.tolist()}: alpha*(1e-3) = {aniso.alpha:.6f}")
print(f"per-eigenvalue weights {np.round(aniso.weights, 4).tolist()}")
