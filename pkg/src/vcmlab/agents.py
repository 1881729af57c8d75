"""Behavioral policies for simulated participants.

Four kinds of agent are supported. Three are archetypes (free rider, full
cooperator, conditional cooperator); the fourth draws a latent contribution
from a censored linear model whose features mirror the regression design:
own first-round contribution, own two lags, and the over/under-contribution
gaps relative to last round's group mean, plus (under session feedback) the
counts of zero and full contributors among the other session members.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ContractError, DomainError
from .game import round_half_up

__all__ = [
    "AgentKind",
    "CoefficientRecord",
    "InitialDraw",
    "AgentSpec",
    "HistoryView",
    "latent_predictor",
    "agent_decide",
]


class AgentKind(str, Enum):
    FREE_RIDER = "free_rider"
    FULL_COOPERATOR = "full_cooperator"
    CONDITIONAL_COOPERATOR = "conditional_cooperator"
    TOBIT_LATENT = "tobit_latent"

    @classmethod
    def parse(cls, label: str) -> "AgentKind":
        try:
            return cls(label)
        except ValueError:
            raise DomainError(f"unknown agent kind {label!r}") from None


@dataclass(frozen=True)
class CoefficientRecord:
    """Coefficients of the censored linear policy, in tokens per regressor unit.

    ``beta_zero_count`` and ``beta_full_count`` multiply session-level counts
    that only exist under session feedback; they stay None for group-feedback
    policies.
    """

    intercept: float
    beta_first: float
    beta_lag1: float
    beta_lag2: float
    beta_over: float
    beta_under: float
    beta_zero_count: float | None = None
    beta_full_count: float | None = None

    @property
    def uses_session_counts(self) -> bool:
        return self.beta_zero_count is not None or self.beta_full_count is not None


@dataclass(frozen=True)
class InitialDraw:
    """Distribution of the round-1 contribution.

    Families: "truncated_normal" (rejection-sampled Normal(mean, spread) on
    [0, e]), "uniform" (continuous on [mean - spread, mean + spread] clipped
    to [0, e]), "constant" (always mean). Samples are rounded half-up to
    integer tokens.
    """

    family: str = "truncated_normal"
    mean: float = 45.0
    spread: float = 25.0

    def __post_init__(self) -> None:
        if self.family not in ("truncated_normal", "uniform", "constant"):
            raise DomainError(f"unknown initial_draw family {self.family!r}")
        if self.spread < 0:
            raise DomainError(f"initial_draw spread must be >= 0, got {self.spread}")

    def sample(self, rng: np.random.Generator, endowment: int) -> int:
        if self.family == "constant":
            value = self.mean
        elif self.family == "uniform":
            lo = max(0.0, self.mean - self.spread)
            hi = min(float(endowment), self.mean + self.spread)
            value = rng.uniform(lo, hi) if hi > lo else lo
        else:
            if self.spread == 0:
                value = self.mean
            else:
                for _ in range(1000):
                    value = rng.normal(self.mean, self.spread)
                    if 0.0 <= value <= endowment:
                        break
                else:
                    raise DomainError(
                        f"truncated_normal({self.mean}, {self.spread}) rejects "
                        f"everything on [0, {endowment}]"
                    )
        value = min(max(value, 0.0), float(endowment))
        return round_half_up(value)


@dataclass(frozen=True)
class AgentSpec:
    """The full behavioral policy of one simulated participant."""

    kind: AgentKind
    coefficients: CoefficientRecord | None = None
    noise_sigma: float = 20.0
    initial_draw: InitialDraw = field(default_factory=InitialDraw)

    def __post_init__(self) -> None:
        if self.noise_sigma < 0:
            raise DomainError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.kind is AgentKind.TOBIT_LATENT and self.coefficients is None:
            raise ContractError("tobit_latent agents require a CoefficientRecord")


@dataclass(frozen=True)
class HistoryView:
    """What one agent may condition on when deciding round t.

    All lagged fields are None in round 1. ``mean_others_lag1`` averages the
    other group members of the agent's round t-1 group. The session counts
    tally zero and full contributors among the other session members at t-1
    and are populated only under session feedback.
    """

    own_first: int | None = None
    own_lag1: int | None = None
    own_lag2: int | None = None
    mean_others_lag1: float | None = None
    zero_count_lag1: int | None = None
    full_count_lag1: int | None = None


def _require(value: float | int | None, name: str) -> float:
    if value is None:
        raise ContractError(f"history view is missing required feature {name!r}")
    return float(value)


def latent_predictor(coeffs: CoefficientRecord, view: HistoryView) -> float:
    """Evaluate the linear policy: intercept + sum of beta_k * feature_k.

    over = max(own_lag1 - mean_others_lag1, 0) and
    under = max(mean_others_lag1 - own_lag1, 0); both are nonnegative
    magnitudes, so exactly one of them is nonzero.
    """
    own_lag1 = _require(view.own_lag1, "own_lag1")
    mean_others = _require(view.mean_others_lag1, "mean_others_lag1")
    over = max(own_lag1 - mean_others, 0.0)
    under = max(mean_others - own_lag1, 0.0)
    value = (
        coeffs.intercept
        + coeffs.beta_first * _require(view.own_first, "own_first")
        + coeffs.beta_lag1 * own_lag1
        + coeffs.beta_lag2 * _require(view.own_lag2, "own_lag2")
        + coeffs.beta_over * over
        + coeffs.beta_under * under
    )
    if coeffs.beta_zero_count is not None:
        value += coeffs.beta_zero_count * _require(view.zero_count_lag1, "zero_count_lag1")
    if coeffs.beta_full_count is not None:
        value += coeffs.beta_full_count * _require(view.full_count_lag1, "full_count_lag1")
    return value


def agent_decide(
    spec: AgentSpec,
    view: HistoryView,
    round: int,
    rng: np.random.Generator,
    endowment: int = 100,
) -> int:
    """One agent's contribution for the given round, an integer in [0, e].

    Round 1 has no history: archetypes play their fixed point and the other
    kinds draw from ``initial_draw``. From round 2 on, the conditional
    cooperator matches last round's group mean (half-up) and the latent agent
    plays clamp(latent + eps, 0, e) rounded half-up with
    eps ~ Normal(0, noise_sigma^2). Callers must supply ``own_lag2`` already
    bootstrapped to the t-1 value in round 2.
    """
    if round < 1:
        raise DomainError(f"round must be >= 1, got {round}")
    if spec.kind is AgentKind.FREE_RIDER:
        return 0
    if spec.kind is AgentKind.FULL_COOPERATOR:
        return endowment
    if round == 1:
        return spec.initial_draw.sample(rng, endowment)
    if spec.kind is AgentKind.CONDITIONAL_COOPERATOR:
        return round_half_up(_require(view.mean_others_lag1, "mean_others_lag1"))
    assert spec.coefficients is not None  # enforced by AgentSpec
    latent = latent_predictor(spec.coefficients, view)
    if spec.noise_sigma > 0:
        latent += rng.normal(0.0, spec.noise_sigma)
    return round_half_up(min(max(latent, 0.0), float(endowment)))
