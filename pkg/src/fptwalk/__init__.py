"""First-passage times of walks with independent, non-identically distributed steps."""

from .boundaries import Boundary, UgCurve, envelopes, make_boundary, ug_interpolate
from .config import ConfigError, ExperimentConfig
from .diagnostics import (series_lind_plus_gamma, lambda_n, lindeberg_fraction, series_h_conditions,
                          series_lind_plus, series_sum_minus, series_sum_plus, truncated_lindeberg,
                          weighted_f_gamma)
from .errors import (BudgetExceeded, ConditionInapplicable, IncompatibleLattice, InsufficientSurvivors,
                     InvalidArgument, OutOfDomain, PreconditionViolated, UndefinedConditional)
from .exact import (check_domination, check_martingale_identity, check_positive_part_bound, evolve, evolve_free,
                    evolve_rational, ssrw_survival_oracle, submartingale_check)
from .increments import (DiscreteDistribution, DiscreteSchedule, feasibility_check, make_four_point,
                         make_power_weighted, make_ssrw, make_truncated_pareto, make_weibullian,
                         make_weighted_rademacher)
from .montecarlo import (McConfig, conditional_endpoint_sample, estimate_survival, meander_ks,
                         simulate_meander_oracle, survival_curve, two_sample_ks)
from .reference import Psi, bm_constant_survival, bm_moving_boundary_mc, meander_endpoint_cdf
from .report import run, ratio_report

__version__ = "0.1.0"
