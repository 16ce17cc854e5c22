"""Trending-agreement statistics for method-comparison studies.

Four-quadrant plot concordance rates over repeated measurements: the
conventional point-counting rate, two per-subject binomial controls, and a
covariance-aware model-based rate computed as a conditional probability
under a 2T-dimensional Gaussian with exclusion zones.  Includes the
multivariate-normal integration engine, a factorial simulation harness,
ROC/AUC diagnosability tools, CSV ingestion, and a CLI.
"""

from .concordance import (
    ConcordanceResult,
    ControlStats,
    QuadrantPattern,
    all_patterns,
    ccr,
    control1,
    control2,
    control_stats,
    denominator_prob,
    enumerate_event_rectangles,
    estimate_and_rate,
    oracle_rate,
    pattern_event_prob,
    poisson_binomial_tail,
    proposed_rate,
)
from .estimators import (
    ConventionalConcordance,
    ModelBasedConcordance,
    PerTimeBinomialConcordance,
    PooledBinomialConcordance,
    SequentialDifferencer,
)
from .exceptions import (
    AllMassExcludedError,
    CholeskyError,
    ConfigError,
    DataError,
    DegenerateLabelsError,
    DegenerateModelError,
    DuplicateRecordError,
    EstimationError,
    IncompleteSeriesError,
    NumericalError,
    NumericalInconsistencyError,
    ParseError,
    QuadConcordError,
    UndefinedRateError,
)
from .io import Dataset, Record, ingest, write_dataset
from .model import GaussianModel, estimate_model, stack_diffs
from .mvn import ProbEstimate, SignedRectangle, cholesky, rect_prob, sample
from .roc import RocCurve, ScoredLabel, auc_pair_count, roc_curve
from .series import (
    AgreementSpec,
    DiffSeries,
    MeasurementSeries,
    PointCategory,
    PointClass,
    Quadrant,
    classify_point,
    compute_differences,
)
from .simulation import (
    CellSummary,
    GridRunResult,
    SimulationCell,
    build_factor_grid,
    cell_model,
    evaluate_diagnosability,
    run_cell,
    run_grid,
    true_rate,
)
from .workflow import (
    AnalysisConfig,
    FixedExclusion,
    QuantileExclusion,
    analyze,
    resolve_exclusion,
    subsample_auc,
)

__version__ = "0.1.0"

__all__ = [
    "AgreementSpec", "AllMassExcludedError", "AnalysisConfig", "CellSummary",
    "CholeskyError", "ConcordanceResult", "ConfigError", "ControlStats",
    "ConventionalConcordance", "DataError", "Dataset", "DegenerateLabelsError",
    "DegenerateModelError", "DiffSeries", "DuplicateRecordError",
    "EstimationError", "FixedExclusion", "GaussianModel", "GridRunResult",
    "IncompleteSeriesError", "MeasurementSeries", "ModelBasedConcordance",
    "NumericalError", "NumericalInconsistencyError", "ParseError",
    "PerTimeBinomialConcordance", "PointCategory", "PointClass",
    "PooledBinomialConcordance", "ProbEstimate", "QuadConcordError",
    "QuadrantPattern", "QuantileExclusion", "Quadrant", "Record", "RocCurve",
    "ScoredLabel", "SequentialDifferencer", "SignedRectangle", "SimulationCell",
    "UndefinedRateError", "all_patterns", "analyze", "auc_pair_count",
    "build_factor_grid", "ccr", "cell_model", "cholesky", "classify_point",
    "compute_differences", "control1", "control2", "control_stats",
    "denominator_prob", "enumerate_event_rectangles", "estimate_and_rate",
    "estimate_model", "evaluate_diagnosability", "ingest", "oracle_rate",
    "pattern_event_prob", "poisson_binomial_tail", "proposed_rate",
    "rect_prob", "resolve_exclusion", "roc_curve", "run_cell", "run_grid",
    "sample", "stack_diffs", "subsample_auc", "true_rate", "write_dataset",
]
