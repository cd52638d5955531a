"""Limit degree laws and simulators for a random graph with preferential
attachment and detachment, and its household (generalized Yule) embedding."""

__version__ = "0.1.0"

from .errors import (
    ConvergenceError,
    DomainError,
    InsufficientSampleError,
    NormalizationError,
    PadyuleError,
    QuadratureError,
    UnsupportedRegimeError,
)
from .params import ModelParams, Regime, classify_regime
from .limit_dist import (
    Pmf,
    TailAsymptotic,
    evaluate_critical_decay,
    expectation,
    limit_pmf,
    limit_pmf_oracle,
    tail_asymptotic,
    transient_prob,
    variance,
)
from .graph_process import DegreeHistogram, DegreeState, simulate
from .yule_process import CensusLog, YuleState, simulate_censuses
from .analysis import (
    ComparisonReport,
    EnsembleSpec,
    compare_distributions,
    embedding_equivalence_test,
    ensemble_degree_distribution,
    fit_power_law_exponent,
)
