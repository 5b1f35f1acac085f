"""Stump change-point estimation when the true regression curve is smooth.

Fit a one-jump step function to data from ``y = f(alpha_n (x - theta0)) + eps``,
solve for the population parameters the fit estimates, sample the three
limit laws (slow, intermediate, fast) and build subsampling intervals when
the rate ``alpha_n`` is unknown.
"""

from .errors import *  # noqa: F401,F403
from .model import (CovariateLaw, Dataset, ModelSpec, SignalFunction, builtin_logistic,
                    builtin_normal_cdf, builtin_piecewise_uniform, generate_dataset,
                    polynomial_tail_certificate, uniform_covariate)
from .estimator import (KnownLevelsFitter, StumpFit, StumpFitter, fit_stump,
                        fit_theta_known_levels, make_fitter, rss_profile)
from .population import (AsymptoticConstants, FixedFunctionConstants, PopulationSolution,
                         asymptotic_constants, criterion_Mn, fixed_function_constants,
                         solve_population)
from .limits import (ChernoffSpec, CompoundArgminSpec, LimitSample, chernoff_spec,
                     sample_chernoff_argmax, sample_compound_argmin, sample_level_limits,
                     spec_fast, spec_intermediate, spec_lambda_c, transition_diagnostic)
from .inference import (ConfidenceInterval, CoverageReport, RateEstimate, SubsampleConfig,
                        build_ci, coverage_experiment, estimate_zeta, rate_exponent)
from .harness import (ExperimentConfig, QQTable, load_config, parse_config, qq_table,
                      run_regime_comparison, run_section5)

__version__ = "0.1.0"
