"""Statistical pipeline: regression design, censored MLE, rank tests, reciprocity."""

from .design import (
    BASE_REGRESSORS,
    SESSION_REGRESSORS,
    DesignRow,
    build_design,
    design_arrays,
)
from .nonparam import (
    TestResult,
    classify_free_rider,
    coeff_diff_z,
    fisher_rz_diff,
    jonckheere,
    mwu_z,
    pearson_r,
)
from .reciprocity import ReciprocityMetrics, reciprocity_metrics
from .tobit import TobitFit, tobit_fit, tobit_fit_arrays, tobit_loglik, tobit_score_matrix

__all__ = [
    "BASE_REGRESSORS",
    "SESSION_REGRESSORS",
    "DesignRow",
    "build_design",
    "design_arrays",
    "TestResult",
    "classify_free_rider",
    "coeff_diff_z",
    "fisher_rz_diff",
    "jonckheere",
    "mwu_z",
    "pearson_r",
    "ReciprocityMetrics",
    "reciprocity_metrics",
    "TobitFit",
    "tobit_fit",
    "tobit_fit_arrays",
    "tobit_loglik",
    "tobit_score_matrix",
]
