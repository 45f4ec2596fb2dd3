"""Schedules that cancel their own leading discretization error.

For a single target eigenvalue the first-order covariance defect can be
driven to zero exactly, either inside the variance-exploding family (via
the shape exponent q = 1 - 2 alpha - alpha^2) or inside the rescaled
family with a stationary noise floor. The cancellation is sharp: detune
the eigenvalue and the defect comes back. For full spectra, the floor
parameter has a closed-form optimum lam_max * tau*(p, d).
"""
import numpy as np

from ddlab import (
    c_eta_star,
    defect_sigma_1,
    make_schedule,
    power_law_lambdas,
    sigma_star_ve,
    tau_star,
)

design_lam, alpha = 2.0, 0.25
sched = sigma_star_ve(design_lam, alpha, sigma_max=80.0)
print(f"variance-exploding design cancelling lam = {design_lam} at alpha = {alpha}")
print(f"{'lam':>8s} {'first-order defect':>20s}")
for lam in (0.02, 0.2, design_lam, 20.0, 200.0):
    d = defect_sigma_1(lam, sched, alpha)
    mark = "   <- design point" if lam == design_lam else ""
    print(f"{lam:8.2f} {d:20.6e}{mark}")
print()

# compare against a plain polynomial schedule on the same spectrum
plain = make_schedule("ve", beta=5.0, sigma_max=80.0)
lams = power_law_lambdas(12, 1.0, lam_max=4.0)
obj_design = sum(defect_sigma_1(l, sigma_star_ve(1.0, alpha, 80.0), alpha) ** 2 / l for l in lams)
obj_plain = sum(defect_sigma_1(l, plain, alpha) ** 2 / l for l in lams)
print(f"12-eigenvalue power law, summed defect^2/lam:")
print(f"  cancelling design (floor at lam=1): {obj_design:10.3f}")
print(f"  plain polynomial schedule:          {obj_plain:10.3f}")
print()

# the optimal noise floor for power-law spectra, and its scaling
print(f"{'p':>6s} {'tau*(p, d=3072)':>16s} {'c_eta* at lam_max=100':>22s}")
for p in (0.5, 1.0, 1.5):
    t = tau_star(p, 3072)
    print(f"{p:6.2f} {t.tau:16.6f} {c_eta_star(100.0, p, 3072):22.4f}")
print()
print("flat spectra (p -> 0) want the floor at lam_max; decaying spectra")
print("pull it down toward the spectral bulk.")
