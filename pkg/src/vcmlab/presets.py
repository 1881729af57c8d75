"""Published reference estimates for the four benchmark experimental cells.

The benchmark study ran the game in two subject pools (Iceland and the US)
under both feedback treatments. Its published censored-regression table and
reciprocity correlations are reproduced here verbatim: they seed generative
agents, and the test suite reconstructs the study's derived statistics
(coefficient-difference z values, correlation comparisons) from them.

Keys: "iceland_group", "us_group", "iceland_session", "us_session".
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .agents import AgentKind, AgentSpec, CoefficientRecord, InitialDraw
from .errors import DomainError

__all__ = [
    "CoefficientStat",
    "ReferenceColumn",
    "ReferenceReciprocity",
    "REFERENCE_ESTIMATES",
    "REFERENCE_RECIPROCITY",
    "CELL_LABELS",
    "reference_column",
    "tobit_agent_from_reference",
]

CELL_LABELS = ("iceland_group", "us_group", "iceland_session", "us_session")


@dataclass(frozen=True)
class CoefficientStat:
    estimate: float
    se: float


@dataclass(frozen=True)
class ReferenceColumn:
    """One published regression column: coefficient stats plus diagnostics."""

    label: str
    coefficients: Mapping[str, CoefficientStat]
    n_obs: int
    pseudo_r2: float
    llf: float
    corr_obs_pred: float
    pct_censored_lower: float
    pct_censored_upper: float

    def coefficient_record(self) -> CoefficientRecord:
        c = self.coefficients
        return CoefficientRecord(
            intercept=c["intercept"].estimate,
            beta_first=c["own_first"].estimate,
            beta_lag1=c["own_lag1"].estimate,
            beta_lag2=c["own_lag2"].estimate,
            beta_over=c["over_lag1"].estimate,
            beta_under=c["under_lag1"].estimate,
            beta_zero_count=(
                c["zero_count_lag1"].estimate if "zero_count_lag1" in c else None
            ),
            beta_full_count=(
                c["full_count_lag1"].estimate if "full_count_lag1" in c else None
            ),
        )


@dataclass(frozen=True)
class ReferenceReciprocity:
    """Published reciprocity correlations for one cell."""

    subjects: int
    mean_individual_r: float
    free_rider_count_r: float

    @property
    def n_obs(self) -> int:
        # one observation per subject per round with a complete lag window
        return self.subjects * 78


def _col(label, rows, n_obs, pseudo_r2, llf, corr, pct0, pct_full):
    return ReferenceColumn(
        label=label,
        coefficients={name: CoefficientStat(est, se) for name, (est, se) in rows.items()},
        n_obs=n_obs,
        pseudo_r2=pseudo_r2,
        llf=llf,
        corr_obs_pred=corr,
        pct_censored_lower=pct0,
        pct_censored_upper=pct_full,
    )


REFERENCE_ESTIMATES: dict[str, ReferenceColumn] = {
    "iceland_group": _col(
        "iceland_group",
        {
            "intercept": (-11.56, 4.38),
            "own_first": (0.28, 0.06),
            "own_lag1": (0.70, 0.07),
            "own_lag2": (0.25, 0.04),
            "over_lag1": (-0.31, 0.10),
            "under_lag1": (0.10, 0.06),
        },
        n_obs=2808, pseudo_r2=0.07, llf=-11043.84, corr=0.65, pct0=15.0, pct_full=4.0,
    ),
    "us_group": _col(
        "us_group",
        {
            "intercept": (-32.67, 7.49),
            "own_first": (0.34, 0.09),
            "own_lag1": (1.11, 0.11),
            "own_lag2": (0.26, 0.08),
            "over_lag1": (-0.42, 0.07),
            "under_lag1": (0.23, 0.09),
        },
        n_obs=2808, pseudo_r2=0.10, llf=-8574.38, corr=0.69, pct0=34.0, pct_full=12.0,
    ),
    "iceland_session": _col(
        "iceland_session",
        {
            "intercept": (-5.78, 6.77),
            "own_first": (0.16, 0.12),
            "own_lag1": (0.67, 0.05),
            "own_lag2": (0.39, 0.05),
            "over_lag1": (-0.24, 0.08),
            "under_lag1": (-0.01, 0.07),
            "zero_count_lag1": (-1.04, 0.52),
            "full_count_lag1": (-0.85, 0.63),
        },
        n_obs=3744, pseudo_r2=0.08, llf=-13994.88, corr=0.72, pct0=16.0, pct_full=14.0,
    ),
    "us_session": _col(
        "us_session",
        {
            "intercept": (-22.85, 5.35),
            "own_first": (0.19, 0.06),
            "own_lag1": (1.07, 0.10),
            "own_lag2": (0.43, 0.06),
            "over_lag1": (-0.61, 0.12),
            "under_lag1": (0.24, 0.08),
            "zero_count_lag1": (-1.27, 0.49),
            "full_count_lag1": (-1.19, 0.65),
        },
        n_obs=2808, pseudo_r2=0.13, llf=-7895.32, corr=0.79, pct0=40.0, pct_full=8.0,
    ),
}

REFERENCE_RECIPROCITY: dict[str, ReferenceReciprocity] = {
    "iceland_group": ReferenceReciprocity(36, 0.14, -0.08),
    "us_group": ReferenceReciprocity(36, 0.20, -0.20),
    "iceland_session": ReferenceReciprocity(48, 0.22, -0.13),
    "us_session": ReferenceReciprocity(36, 0.44, -0.42),
}


def reference_column(cell: str) -> ReferenceColumn:
    try:
        return REFERENCE_ESTIMATES[cell]
    except KeyError:
        raise DomainError(
            f"unknown reference cell {cell!r}; expected one of {CELL_LABELS}"
        ) from None


def tobit_agent_from_reference(
    cell: str,
    noise_sigma: float = 20.0,
    initial_draw: InitialDraw | None = None,
) -> AgentSpec:
    """A latent-policy agent parameterized by one published column.

    The published table reports no residual sigma, so ``noise_sigma`` is a
    free parameter with a conventional default of 20 tokens.
    """
    return AgentSpec(
        kind=AgentKind.TOBIT_LATENT,
        coefficients=reference_column(cell).coefficient_record(),
        noise_sigma=noise_sigma,
        initial_draw=initial_draw if initial_draw is not None else InitialDraw(),
    )
