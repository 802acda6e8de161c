"""Curious-agent simulation toolkit.

Diffusion-driven information arrival, Bhattacharyya-distance similarity
over dimension-reduced Gaussian summaries, a repetition-strengthened
knowledge store with sleep compression, and agents that answer "I don't
know" to invite teaching.
"""

from .agent import Agent, Answer, JudgedAnswer, TickReport, peer_teach
from .diffusion import (
    AdoptionSeries,
    BassParams,
    FitConvergenceError,
    FitResult,
    fit,
    hazard,
    installed_fraction,
    peak_time,
    sales_rate,
    sample_arrivals,
    step_arrivals,
)
from .distance import (
    CholeskyError,
    Divergence,
    QuadratureError,
    bc_discrete,
    bc_gaussian,
    bc_multi,
    bc_mvn,
    bc_quadrature,
)
from .distributions import (
    CategoricalDist,
    GaussianDist,
    MvnSummary,
    SufficientStats,
    estimate_categorical,
    estimate_mvn,
    merge_stats,
    stats_from_batch,
    stats_to_mvn,
)
from .knowledge import (
    CompressionReport,
    KnowledgeItem,
    KnowledgeStore,
    ReceiveOutcome,
    StoreParseError,
    retention_weight,
)
from .projection import (
    JlMap,
    MapSearch,
    MapSearchError,
    VerifyReport,
    apply,
    apply_rows,
    find_valid_map,
    jl_min_dimension,
    verify,
)
from .sim import (
    AgentConfig,
    ConfigError,
    Environment,
    EnvironmentConfig,
    MetricsRow,
    SimConfig,
    SimResult,
    TopicConfig,
    report,
    run,
    summarize,
    write_outputs,
)

__all__ = [
    "Agent", "Answer", "JudgedAnswer", "TickReport", "peer_teach",
    "AdoptionSeries", "BassParams", "FitConvergenceError", "FitResult",
    "fit", "hazard", "installed_fraction", "peak_time", "sales_rate",
    "sample_arrivals", "step_arrivals",
    "CholeskyError", "Divergence", "QuadratureError", "bc_discrete",
    "bc_gaussian", "bc_multi", "bc_mvn", "bc_quadrature",
    "CategoricalDist", "GaussianDist", "MvnSummary", "SufficientStats",
    "estimate_categorical", "estimate_mvn", "merge_stats",
    "stats_from_batch", "stats_to_mvn",
    "CompressionReport", "KnowledgeItem", "KnowledgeStore",
    "ReceiveOutcome", "StoreParseError", "retention_weight",
    "JlMap", "MapSearch", "MapSearchError", "VerifyReport", "apply",
    "apply_rows", "find_valid_map", "jl_min_dimension", "verify",
    "AgentConfig", "ConfigError", "Environment", "EnvironmentConfig",
    "MetricsRow", "SimConfig", "SimResult", "TopicConfig", "report",
    "run", "summarize", "write_outputs",
]

__version__ = "0.1.0"
