"""Discriminability analysis for link-prediction evaluation metrics.

The package measures how well an evaluation metric separates prediction
tasks of different difficulty: a graph's edge set is split into train and
test parts, the training graph is progressively thinned over a retention
grid, every retained fraction is scored by a predictor and each metric, and
paired trials turn the per-fraction metric values into a discriminability
score in [0, 1). Higher means the metric more reliably orders easier tasks
above harder ones.
"""

__version__ = "0.1.0"

from .graph import (
    Graph,
    GraphFormatError,
    PairSet,
    generate_ba,
    generate_er,
    graph_to_text,
    load_edge_list,
    non_edges,
)
from .sampling import (
    DEFAULT_Q_GRID,
    DEFAULT_TEST_FRACTION,
    EdgeSplit,
    RetentionSample,
    TrialPlan,
    derive_trial_seed,
    retain_fraction,
    round_half_up,
    split_edges,
)
from .predictors import (
    DEFAULT_DENSE_CAP,
    AlgorithmSpec,
    ScoreTable,
    default_katz_beta,
    export_scores,
    load_external_scores,
    parse_score_file,
    score,
    spectral_radius_estimate,
)
from .evaluation import (
    ALL_METRICS,
    CLOSED_FORM_METRICS,
    CURVE_METRICS,
    ConfusionCounts,
    HMeasureConfig,
    RankedOutcome,
    auc,
    auc_mroc,
    auc_pairwise,
    auc_precision,
    aupr,
    confusion_counts,
    evaluate_metrics,
    h_measure,
    mcc,
    ndcg,
    normalize_metric,
    precision,
    rank_positives,
)
from .discriminability import (
    DiscriminabilityResult,
    ExperimentError,
    GreyCorrelation,
    PValueMatrix,
    RankRow,
    ScoreTensor,
    correlation_matrix,
    discriminability_score,
    grey_correlation,
    pvalue_matrix,
    rank_metrics,
    run_experiment,
    seeds_for_trial,
    sweep_pstar,
)
from .harness import (
    ConfigError,
    RunConfig,
    cmd_correlate,
    cmd_metrics,
    cmd_report,
    cmd_run,
    format_value,
    read_table,
    write_table,
)

__all__ = [
    "ALL_METRICS",
    "AlgorithmSpec",
    "CLOSED_FORM_METRICS",
    "CURVE_METRICS",
    "ConfigError",
    "ConfusionCounts",
    "DEFAULT_DENSE_CAP",
    "DEFAULT_Q_GRID",
    "DEFAULT_TEST_FRACTION",
    "DiscriminabilityResult",
    "EdgeSplit",
    "ExperimentError",
    "Graph",
    "GraphFormatError",
    "GreyCorrelation",
    "HMeasureConfig",
    "PValueMatrix",
    "PairSet",
    "RankRow",
    "RankedOutcome",
    "RetentionSample",
    "RunConfig",
    "ScoreTable",
    "ScoreTensor",
    "TrialPlan",
    "auc",
    "auc_mroc",
    "auc_pairwise",
    "auc_precision",
    "aupr",
    "cmd_correlate",
    "cmd_metrics",
    "cmd_report",
    "cmd_run",
    "confusion_counts",
    "correlation_matrix",
    "default_katz_beta",
    "derive_trial_seed",
    "discriminability_score",
    "evaluate_metrics",
    "export_scores",
    "format_value",
    "generate_ba",
    "generate_er",
    "graph_to_text",
    "grey_correlation",
    "h_measure",
    "load_edge_list",
    "load_external_scores",
    "mcc",
    "ndcg",
    "non_edges",
    "normalize_metric",
    "parse_score_file",
    "precision",
    "pvalue_matrix",
    "rank_metrics",
    "rank_positives",
    "read_table",
    "retain_fraction",
    "round_half_up",
    "run_experiment",
    "score",
    "seeds_for_trial",
    "split_edges",
    "spectral_radius_estimate",
    "sweep_pstar",
    "write_table",
    "__version__",
]
