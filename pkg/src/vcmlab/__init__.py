"""vcmlab: a laboratory for linear public-goods (VCM) experiments.

Run live 12-participant sessions or agent-based simulations under group- or
session-level feedback, then push the logs through the full analysis
pipeline: reciprocity correlations, double-censored Tobit regressions with
participant-clustered standard errors, coefficient-difference tests, and
rank-based treatment comparisons.
"""

from .agents import (
    AgentKind,
    AgentSpec,
    CoefficientRecord,
    HistoryView,
    InitialDraw,
    agent_decide,
    latent_predictor,
)
from .econ import (
    DesignRow,
    ReciprocityMetrics,
    TestResult,
    TobitFit,
    build_design,
    classify_free_rider,
    coeff_diff_z,
    fisher_rz_diff,
    jonckheere,
    mwu_z,
    pearson_r,
    reciprocity_metrics,
    tobit_fit,
    tobit_loglik,
)
from .errors import (
    ContractError,
    ConvergenceError,
    DomainError,
    SnapshotError,
    StructuralError,
)
from .game import (
    ContributionRecord,
    FeedbackView,
    GroupAssignment,
    PanelEntry,
    SessionConfig,
    Treatment,
    assign_groups,
    build_feedback,
    compute_round_payoffs,
    convert_tokens,
)
from .presets import (
    REFERENCE_ESTIMATES,
    REFERENCE_RECIPROCITY,
    reference_column,
    tobit_agent_from_reference,
)
from .report import (
    AnalysisReport,
    build_report,
    per_round_means,
    render_report,
    significance_stars,
)
from .simulate import (
    BatchResult,
    RunSpec,
    SessionLog,
    parse_run_spec,
    read_log_jsonl,
    run_batch,
    run_session,
    validate_log,
    write_log_csv,
    write_log_jsonl,
)

__version__ = "0.1.0"

__all__ = [
    "AgentKind",
    "AgentSpec",
    "CoefficientRecord",
    "HistoryView",
    "InitialDraw",
    "agent_decide",
    "latent_predictor",
    "DesignRow",
    "ReciprocityMetrics",
    "TestResult",
    "TobitFit",
    "build_design",
    "classify_free_rider",
    "coeff_diff_z",
    "fisher_rz_diff",
    "jonckheere",
    "mwu_z",
    "pearson_r",
    "reciprocity_metrics",
    "tobit_fit",
    "tobit_loglik",
    "ContractError",
    "ConvergenceError",
    "DomainError",
    "SnapshotError",
    "StructuralError",
    "ContributionRecord",
    "FeedbackView",
    "GroupAssignment",
    "PanelEntry",
    "SessionConfig",
    "Treatment",
    "assign_groups",
    "build_feedback",
    "compute_round_payoffs",
    "convert_tokens",
    "REFERENCE_ESTIMATES",
    "REFERENCE_RECIPROCITY",
    "reference_column",
    "tobit_agent_from_reference",
    "AnalysisReport",
    "build_report",
    "per_round_means",
    "render_report",
    "significance_stars",
    "BatchResult",
    "RunSpec",
    "SessionLog",
    "parse_run_spec",
    "read_log_jsonl",
    "run_batch",
    "run_session",
    "validate_log",
    "write_log_csv",
    "write_log_jsonl",
    "__version__",
]
