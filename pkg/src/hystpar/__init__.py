"""Hysteretic and buffered Poisson autoregressive count time-series models.

Simulation, profile maximum likelihood with integer-threshold search,
asymptotic standard errors, separate-family score tests between the buffered
and hysteretic variants, rolling one-step forecasting, regime diagnostics,
and a Monte Carlo replication engine.
"""

from .diagnostics import (
    ContingencyTable2x2,
    IdSequence,
    contingency,
    exact_binomial_discordant,
    id_card_sequence,
    lr_same_chain,
    markov_order_bic,
)
from .errors import (
    CsvParseError,
    DegenerateTestError,
    EstimationError,
    HystparError,
    SingularInformationError,
    StudyError,
)
from .estimation import (
    FitResult,
    OptimizerConfig,
    ProfileCell,
    ThresholdGrid,
    default_grid,
    fit,
    fit_coefficients,
    standard_errors,
)
from .forecast import ForecastReport, one_step_mean, rolling_forecast
from .likelihood import (
    GradientPath,
    InformationMatrix,
    information_matrix,
    intensity_gradient,
    log_likelihood,
    score_vector,
)
from .models import (
    CoefficientVector,
    CountSeries,
    InitPolicy,
    IntensityPath,
    ModelKind,
    ModelSpec,
    Thresholds,
    intensity_filter,
    regime_path,
    regime_path_bpart,
    regime_path_hpart,
    regime_path_setpar,
    simulate,
)
from .montecarlo import McSummary, SizePowerTable, run_estimation_study, run_test_study
from .septests import (
    CompoundWeight,
    SigmaEstimates,
    TestOutcome,
    compound_intensity,
    default_c_candidates,
    estimate_sigma_bvh,
    score_stat_bpart,
    test_bpart_vs_hpart,
    test_hpart_vs_bpart,
)

__version__ = "0.1.0"
