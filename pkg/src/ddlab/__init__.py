"""Discretization-defect laboratory for diffusion samplers.

Computes, validates, and minimizes the Euler time-discretization error of
score-based samplers on Gaussian and Gaussian-mixture data: first- and
second-order defect coefficients per covariance eigendirection, squared
Frechet-distance expansions, an exact affine-drift oracle for
cross-checking, Monte-Carlo samplers, and optimal-parameter procedures
for the drift weight, the stationary-noise floor, and the noise-schedule
shape.
"""

__version__ = "0.1.0"

from .estimators import (
    MomentEstimate,
    PerEigErrors,
    bootstrap_ci,
    empirical_fd,
    empirical_moments,
    per_eig_errors,
)
from .exact_oracle import (
    RichardsonDefects,
    ScalarMomentPath,
    discrete_moments,
    exact_moments,
    matrix_discrete_moments,
    richardson_defects,
)
from .gaussian_theory import (
    DefectTable,
    QuadratureConfig,
    QuadratureError,
    boundary_term_mu,
    boundary_term_sigma,
    c1_constant,
    c2_constant,
    closed_form_fm,
    closed_form_ve_sigma1,
    closed_form_ve_sigma2_alpha1,
    closed_form_vp_poly,
    defect_mu_1,
    defect_mu_2,
    defect_sigma_1,
    defect_sigma_2,
    defect_table,
    frechet_expansion_2,
    frechet_expansion_3,
    init_error_fd,
    lipschitz_objective,
    mean_collapse_vk,
)
from .optimizers import (
    AlphaStarResult,
    TauStarResult,
    alpha_star_analytic,
    alpha_star_numeric,
    c_eta_star,
    c_eta_star_numeric,
    log_convexity_margin,
    psi_p,
    tau_star,
)
from .optimizers import sigma_star_ve as sigma_star_ve_schedule
from .optimizers import sigma_star_vp as sigma_star_vp_schedule
from .rng import spawn_generators, substream
from .sampler import (
    GMM,
    Gaussian,
    SampleBatch,
    em_sample,
    gmm_log_density,
    gmm_score,
    power_law_gmm,
    reverse_step,
)
from .schedules import (
    AssumptionReport,
    DiffusionConfig,
    Schedule,
    ScheduleCoeffs,
    check_assumption,
    coeffs,
    make_schedule,
    time_change,
)
from .spectral import (
    PowerLawFit,
    Spectrum,
    bures_sq,
    eigendecompose,
    fit_powerlaw,
    frechet,
    power_law_lambdas,
    project_per_eig,
)

__all__ = [name for name in dir() if not name.startswith("_")]
