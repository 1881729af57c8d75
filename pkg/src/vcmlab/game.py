"""Core types and pure functions of the linear public-goods game.

A session has ``group_count_G`` groups of ``group_size_n`` players. Each
round every player splits an endowment of ``endowment_e`` tokens between a
private account and a group account; the group account is multiplied by
``multiplier_g`` and shared equally, so a player contributing ``x`` into a
group whose contributions sum to ``S`` earns::

    (endowment_e - x) + S * multiplier_g / group_size_n

Groups are re-drawn uniformly at random every round (strangers matching),
and end-of-round feedback depends on the treatment: the player's own group
only, or the whole session clustered by group.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import DomainError, StructuralError

__all__ = [
    "Treatment",
    "SessionConfig",
    "GroupAssignment",
    "ContributionRecord",
    "PanelEntry",
    "FeedbackView",
    "compute_round_payoffs",
    "assign_groups",
    "build_feedback",
    "convert_tokens",
    "round_half_up",
]


class Treatment(str, Enum):
    """What a participant is shown after each round."""

    GROUP = "group"      # the four contributions of the own group
    SESSION = "session"  # all twelve contributions, clustered by group

    @classmethod
    def parse(cls, label: str) -> "Treatment":
        try:
            return cls(label)
        except ValueError:
            raise DomainError(
                f"unknown treatment {label!r}; expected 'group' or 'session'"
            ) from None


def round_half_up(value: float) -> int:
    """Round a nonnegative quantity to the nearest integer, halves up.

    Python's built-in round() is banker's rounding; payouts and token
    decisions here always break ties away from zero.
    """
    if value < 0:
        raise DomainError(f"round_half_up expects a nonnegative value, got {value}")
    return int(math.floor(value + 0.5))


@dataclass(frozen=True)
class SessionConfig:
    """All parameters of one session.

    The defaults are the benchmark parameterization: 12 players in 3 groups
    of 4, endowment 100, multiplier 2 (MPCR 0.5), 80 rounds.
    """

    endowment_e: int = 100
    multiplier_g: float = 2.0
    group_size_n: int = 4
    group_count_G: int = 3
    rounds_T: int = 80
    treatment: Treatment = Treatment.GROUP
    conversion_rate: float = 0.32
    seed: int = 0

    def __post_init__(self) -> None:
        if self.endowment_e <= 0:
            raise DomainError(f"endowment_e must be positive, got {self.endowment_e}")
        if self.rounds_T < 1:
            raise DomainError(f"rounds_T must be >= 1, got {self.rounds_T}")
        if self.group_size_n < 2 or self.group_count_G < 1:
            raise DomainError(
                f"need group_size_n >= 2 and group_count_G >= 1, got "
                f"{self.group_size_n} and {self.group_count_G}"
            )
        # the social-dilemma regime: contributing is efficient but dominated
        if not (1.0 < self.multiplier_g < self.group_size_n):
            raise DomainError(
                f"multiplier_g must satisfy 1 < g < n, got g={self.multiplier_g} "
                f"with n={self.group_size_n}"
            )
        if self.conversion_rate <= 0:
            raise DomainError(f"conversion_rate must be positive, got {self.conversion_rate}")

    @property
    def session_size(self) -> int:
        return self.group_size_n * self.group_count_G

    @property
    def mpcr(self) -> float:
        """Marginal per-capita return of a token placed in the group account."""
        return self.multiplier_g / self.group_size_n

    def validate_contribution(self, tokens: object) -> int:
        """Check one contribution value and return it as an int."""
        if isinstance(tokens, bool) or not isinstance(tokens, (int, np.integer)):
            raise DomainError(f"contributions are integer tokens, got {tokens!r}")
        value = int(tokens)
        if not 0 <= value <= self.endowment_e:
            raise DomainError(
                f"contribution {value} outside [0, {self.endowment_e}]"
            )
        return value


@dataclass(frozen=True)
class GroupAssignment:
    """The partition of one round: ``partition[subject_id]`` is the group id."""

    round: int
    partition: tuple[int, ...]

    def group_of(self, subject_id: int) -> int:
        try:
            return self.partition[subject_id]
        except IndexError:
            raise KeyError(f"unknown subject_id {subject_id}") from None

    def members_of(self, group_id: int) -> tuple[int, ...]:
        return tuple(i for i, g in enumerate(self.partition) if g == group_id)

    @property
    def group_ids(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.partition)))

    @classmethod
    def from_groups(cls, round: int, groups: Sequence[Sequence[int]]) -> "GroupAssignment":
        size = sum(len(g) for g in groups)
        partition = [-1] * size
        for gid, members in enumerate(groups):
            for sid in members:
                if not 0 <= sid < size or partition[sid] != -1:
                    raise StructuralError(f"groups do not partition 0..{size - 1}")
                partition[sid] = gid
        return cls(round=round, partition=tuple(partition))

    def check(self, config: SessionConfig) -> None:
        """Raise StructuralError unless this is a valid partition under config."""
        if len(self.partition) != config.session_size:
            raise StructuralError(
                f"partition covers {len(self.partition)} subjects, "
                f"expected {config.session_size}"
            )
        counts: dict[int, int] = {}
        for gid in self.partition:
            counts[gid] = counts.get(gid, 0) + 1
        if len(counts) != config.group_count_G or any(
            c != config.group_size_n for c in counts.values()
        ):
            raise StructuralError(
                f"groups must be {config.group_count_G} disjoint sets of "
                f"{config.group_size_n}, got sizes {sorted(counts.values())}"
            )


@dataclass(frozen=True)
class ContributionRecord:
    """One (session, round, subject) row of the canonical log."""

    session_id: str
    round: int
    subject_id: int
    group_id: int
    contribution: int
    earnings: float


@dataclass(frozen=True)
class PanelEntry:
    """One box of a feedback panel: a contribution, flagged when it is the viewer's."""

    tokens: int
    own: bool = False


@dataclass(frozen=True)
class FeedbackView:
    """Exactly what one subject sees after a round.

    Panels are sorted by contribution (descending) inside each group cluster
    so positions carry no identity across rounds; only the viewer's own entry
    is flagged. ``session_panel`` lists the viewer's own group first and is
    present exactly under the session treatment.
    """

    subject_id: int
    round: int
    own_contribution: int
    others_in_group_sum: int
    earnings_from_private: int
    earnings_from_group: float
    own_round_earnings_total: float
    group_panel: tuple[PanelEntry, ...]
    session_panel: tuple[tuple[PanelEntry, ...], ...] | None = None


def compute_round_payoffs(
    config: SessionConfig,
    assignment: GroupAssignment,
    contributions: Sequence[int],
) -> list[float]:
    """Earnings of every subject for one round.

    Subject i in a group with contribution sum S earns
    ``(e - x_i) + S * g / n``. Raises DomainError for out-of-range
    contributions and StructuralError for a malformed assignment.
    """
    assignment.check(config)
    if len(contributions) != config.session_size:
        raise StructuralError(
            f"got {len(contributions)} contributions for {config.session_size} subjects"
        )
    xs = [config.validate_contribution(x) for x in contributions]
    group_sums: dict[int, int] = {}
    for sid, x in enumerate(xs):
        gid = assignment.partition[sid]
        group_sums[gid] = group_sums.get(gid, 0) + x
    share = config.multiplier_g / config.group_size_n
    return [
        (config.endowment_e - x) + group_sums[assignment.partition[sid]] * share
        for sid, x in enumerate(xs)
    ]


def assign_groups(
    config: SessionConfig,
    subject_ids: Sequence[int],
    rng: np.random.Generator,
    round: int = 1,
) -> GroupAssignment:
    """Draw a uniformly random partition into G unlabeled groups of n.

    A uniform random permutation cut into consecutive blocks of n is a
    uniform labeled partition; group labels themselves carry no meaning
    across rounds. Deterministic given the generator state.
    """
    ids = list(subject_ids)
    if len(set(ids)) != len(ids):
        raise StructuralError("subject_ids contains duplicates")
    if len(ids) != config.session_size:
        raise StructuralError(
            f"got {len(ids)} subjects, expected {config.session_size}"
        )
    order = rng.permutation(len(ids))
    partition = [-1] * len(ids)
    for slot, idx in enumerate(order):
        partition[ids[int(idx)]] = slot // config.group_size_n
    if -1 in partition:
        raise StructuralError("subject_ids must be exactly 0..session_size-1")
    return GroupAssignment(round=round, partition=tuple(partition))


def _sorted_panel(values: Sequence[int], own_value: int | None) -> tuple[PanelEntry, ...]:
    """Descending panel with at most one entry flagged as the viewer's own."""
    ordered = sorted(values, reverse=True)
    entries: list[PanelEntry] = []
    flagged = own_value is None
    for v in ordered:
        if not flagged and v == own_value:
            entries.append(PanelEntry(tokens=v, own=True))
            flagged = True
        else:
            entries.append(PanelEntry(tokens=v))
    return tuple(entries)


def build_feedback(
    config: SessionConfig,
    assignment: GroupAssignment,
    contributions: Sequence[int],
    earnings: Sequence[float],
    subject_id: int,
) -> FeedbackView:
    """Assemble the treatment-correct end-of-round view for one subject."""
    if not 0 <= subject_id < config.session_size:
        raise KeyError(f"unknown subject_id {subject_id}")
    if len(contributions) != config.session_size or len(earnings) != config.session_size:
        raise StructuralError("contributions/earnings must cover the whole session")
    own_gid = assignment.group_of(subject_id)
    members = assignment.members_of(own_gid)
    own_x = int(contributions[subject_id])
    group_values = [int(contributions[sid]) for sid in members]
    others_sum = sum(group_values) - own_x
    from_group = (own_x + others_sum) * config.mpcr
    view_args = dict(
        subject_id=subject_id,
        round=assignment.round,
        own_contribution=own_x,
        others_in_group_sum=others_sum,
        earnings_from_private=config.endowment_e - own_x,
        earnings_from_group=from_group,
        own_round_earnings_total=float(earnings[subject_id]),
        group_panel=_sorted_panel(group_values, own_x),
    )
    if config.treatment is Treatment.SESSION:
        clusters = [view_args["group_panel"]]
        rest = []
        for gid in assignment.group_ids:
            if gid == own_gid:
                continue
            values = [int(contributions[sid]) for sid in assignment.members_of(gid)]
            rest.append(_sorted_panel(values, None))
        # other clusters ordered by content, not by group label
        rest.sort(key=lambda panel: tuple(-e.tokens for e in panel))
        clusters.extend(rest)
        view_args["session_panel"] = tuple(clusters)
    return FeedbackView(**view_args)


def convert_tokens(total_tokens: float, conversion_rate: float) -> Decimal:
    """Convert a token total to currency, rounded half-up to 2 decimals.

    The rounding happens exactly once, at payout; everything upstream stays
    in exact tokens.
    """
    if total_tokens < 0:
        raise DomainError(f"total_tokens must be >= 0, got {total_tokens}")
    if conversion_rate <= 0:
        raise DomainError(f"conversion_rate must be > 0, got {conversion_rate}")
    amount = Decimal(str(total_tokens)) * Decimal(str(conversion_rate))
    return amount.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)
