"""HTMP random-matrix toolkit.

Special functions, spectral laws of heavy-tailed Wishart-type ensembles,
tridiagonal samplers, spectrum estimators and a command-line front end.
"""
from .errors import (ConditioningError, ContractError, DomainError, EstimationError,
                     PrecisionError, UnreliableEstimateWarning)
from .specfun import Accuracy, kummer_1f1, log_gamma, reg_inc_beta, tricomi_u, tricomi_u_log
from .rmt_densities import (INFINITE, HTMPParams, InvGammaParams, InverseParams, MPParams,
                            ScaledParams, density_cdf, htmp_moment, htmp_pdf, inverse_law_pdf,
                            invgamma_pdf, law_pdf, mp_pdf, stieltjes, stieltjes_deriv,
                            tail_exponents, total_mass)
from .sampler import (EigenSample, EnsembleSpec, RngStream, conjugate_with_covariance,
                      sample_htmp_esd, sample_inverse_esd, sample_laguerre_beta_eigs,
                      wishart_quadratic_form)
from .estimators import (FitReport, KappaEstimate, StructureKind, StructureSpec,
                         closed_form_kappa, estimate_kappa_fixed_point, fit_htmp,
                         hill_estimator, invgamma_mle, ks_statistic, log_weight, lower_slope)
from .applications import (MasterParams, PhaseLabel, classify_phase, gamma_from_master,
                           gradient_norm_tail_check, master_to_ensemble, scaling_error_curve)

__version__ = "0.1.0"
