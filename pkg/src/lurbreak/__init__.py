"""Break-date estimation and sup-Wald testing for predictive regressions with persistent regressors."""

from __future__ import annotations

from .bootstrap import BootstrapResult, BootstrapSpec, wild_bootstrap
from .breakpoint import (
    BreakEstimate,
    RssDecomposition,
    TrimSpec,
    estimate_single_break,
    estimate_two_breaks_sequential,
    rss_difference_decomposition,
    rss_profile,
    rss_split,
)
from .dgp import (
    BreakConfig,
    Dataset,
    InnovationParams,
    PersistenceSpec,
    RegimeSpec,
    simulate_ar1_break,
    simulate_innovations,
    simulate_linear_process_errors,
    simulate_lur_regressor,
    simulate_mean_variance_break,
    simulate_predictive_break,
    simulate_predictive_null,
    simulate_three_regime,
)
from .estimators import (
    IvxSpec,
    LrvEstimate,
    SegmentFit,
    df_t_statistic,
    ivx_filter,
    ivx_instrument,
    ivx_segment,
    lrv,
    ols_segment,
)
from .exceptions import DegenerateSegmentError, ParameterError
from .limits import (
    LimitSample,
    PathGrid,
    critical_values,
    joint_lur_functionals,
    nbb_sup_quantiles,
    simulate_brownian,
    simulate_ou_path,
    theorem1_beta2_limit,
)
from .mc import (
    ExperimentReport,
    ExperimentSpec,
    run_breakdate_accuracy,
    run_estimator_distribution,
    run_experiment,
    run_ols_vs_ivx_comparison,
    run_size_power,
)
from .wald import WaldScan, sup_wald_scan, wald_ivx_at, wald_ols_at

__version__ = "0.1.0"
