"""Exact unconditional m-test for d x m binomial contingency tables.

The m-test compares experiments with fixed column totals by integrating the
unknown outcome probabilities over their whole domain instead of
conditioning on the other margin (Fisher) or maximizing a nuisance
parameter (Barnard).  This package provides the log-space kernels, exact
table-space p-values (two-sided for d x m, one-sided for 2x2),
exact-arithmetic oracles, Fisher/Barnard baselines, Monte Carlo power
analysis and a CLI.
"""

from .exactprob import (
    CapacityError,
    LogFactorialTable,
    MarginalSpec,
    NumericError,
    TableCounts,
    log_binomial,
    log_factorial,
    log_multinomial,
    one_sided_base,
    one_sided_log_prob,
    one_sided_step_s1,
    one_sided_step_s2,
    two_sided_base,
    two_sided_log_prob,
    two_sided_step,
)
from .enumeration import (
    DEFAULT_MAX_TABLES,
    MAX_TABLES_ENV,
    TIE_TOLERANCE,
    PValueResult,
    compositions,
    count_tables,
    enumerate_tables,
    one_sided_pvalue,
    probability_grid,
    two_sided_normalization,
    two_sided_pvalue,
)
from .oracle import quadrature_two_sided, rational_one_sided, rational_two_sided
from .baselines import barnard_pvalue, fisher_pvalue
from .montecarlo import (
    HYPOTHESES,
    PowerCurveRow,
    SimConfig,
    assign_probabilities,
    power_study,
    pvalues_for_tables,
    roc_power,
    sample_column,
    simulate,
)

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "DEFAULT_MAX_TABLES",
    "HYPOTHESES",
    "LogFactorialTable",
    "MAX_TABLES_ENV",
    "MarginalSpec",
    "NumericError",
    "PValueResult",
    "PowerCurveRow",
    "SimConfig",
    "TIE_TOLERANCE",
    "TableCounts",
    "assign_probabilities",
    "barnard_pvalue",
    "compositions",
    "count_tables",
    "enumerate_tables",
    "fisher_pvalue",
    "log_binomial",
    "log_factorial",
    "log_multinomial",
    "one_sided_base",
    "one_sided_log_prob",
    "one_sided_pvalue",
    "one_sided_step_s1",
    "one_sided_step_s2",
    "power_study",
    "probability_grid",
    "pvalues_for_tables",
    "quadrature_two_sided",
    "rational_one_sided",
    "rational_two_sided",
    "roc_power",
    "sample_column",
    "simulate",
    "two_sided_base",
    "two_sided_log_prob",
    "two_sided_normalization",
    "two_sided_pvalue",
    "two_sided_step",
    "__version__",
]
