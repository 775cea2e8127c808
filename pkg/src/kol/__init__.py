"""kol: waiting times of an Ornstein-Uhlenbeck particle under state-dependent
killing, by three independent routes -- Monte Carlo paths, a Fokker-Planck
solver, and exact Laplace-domain formulas.

The name is short for "killed OU lifetimes".
"""

from .errors import (AccuracyError, ConfigurationError, DomainError,
                     EmptyEstimateError, InsufficientDataError,
                     InvalidSpecError, KolError, PoleError, SchemeError,
                     SimulationError, UnsupportedDataError)
from .ratefn import (AdmissibilityReport, Arctan, Exponential,
                     PiecewiseConstant, Tabulated, eval_rate, eval_rate_array,
                     rate_from_dict, rate_to_dict, validate_rate)
from .specfun import (AccuracyPolicy, DEFAULT_POLICY, bessel_i,
                      bessel_i_scaled, gamma_fn, kummer_m, log_gamma,
                      log_pcf_u, pcf_u, pcf_u_deriv, pcf_v, rgamma)
from .analytic import (InversionPolicy, InversionResult, LaplaceModel,
                       digamma_ratio, f_hat, f_hat_deriv,
                       gaver_stehfest_weights, inverse_laplace, n0_intermediate,
                       n0_longtime, n0_transform, n_hat)
from .sde import (OUParams, SimConfig, WaitingTimeDataset, WaitingTimeOutcome,
                  em_step, clock_step, ou_exact_transition, read_dataset,
                  sample_waiting_time, simulate_batch, write_dataset)
from .pde import (FPGrid, FPSolution, default_domain, solve_fokker_planck,
                  survival_from_pde)
from .stats import (HistogramPDF, LineFit, SurvivalCurve, TailReport,
                    detect_transition, fit_exponential_tail, fit_power_law,
                    freedman_diaconis_width, histogram_pdf, ks_distance,
                    survival_curve)
from ._version import __version__
