"""Reciprocity summaries of one experimental cell.

Two views of the same behavioral question: per subject, the correlation of
the own contribution with the mean contribution of the other members of the
previous round's group (averaged over subjects); and pooled over all
(subject, round) pairs, the correlation of the own contribution with the
number of free riders among those same previous-round group mates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from ..errors import StructuralError
from ..simulate import SessionLog
from .nonparam import classify_free_rider, pearson_r

__all__ = ["ReciprocityMetrics", "reciprocity_metrics"]


@dataclass(frozen=True)
class ReciprocityMetrics:
    mean_individual_r: float      # nan when every subject was excluded
    subjects_used: int
    subjects_excluded: int        # constant own or constant other-mean series
    pooled_free_rider_r: float    # nan when degenerate
    n_pairs: int


def reciprocity_metrics(logs: SessionLog | Sequence[SessionLog]) -> ReciprocityMetrics:
    """Compute both metrics for a cell of logs (t = 2..T)."""
    if isinstance(logs, SessionLog):
        logs = [logs]
    if not logs:
        raise StructuralError("no logs given")
    individual_rs: list[float] = []
    excluded = 0
    pooled_own: list[float] = []
    pooled_free_riders: list[float] = []
    for log in logs:
        config = log.config
        contributions = log.contributions_by_round()
        groups = log.groups_by_round()
        if set(contributions) != set(range(1, config.rounds_T + 1)):
            raise StructuralError(f"log {log.session_id} is missing rounds")
        for sid in range(config.session_size):
            own: list[float] = []
            other_means: list[float] = []
            free_rider_counts: list[float] = []
            for t in range(2, config.rounds_T + 1):
                prev_x = contributions[t - 1]
                prev_groups = groups[t - 1]
                gid = prev_groups[sid]
                others = [
                    prev_x[o]
                    for o, g in prev_groups.items()
                    if g == gid and o != sid
                ]
                own.append(float(contributions[t][sid]))
                other_means.append(sum(others) / len(others))
                free_rider_counts.append(
                    float(sum(classify_free_rider(x, config.endowment_e) for x in others))
                )
            r, _ = pearson_r(own, other_means)
            if math.isnan(r):
                excluded += 1
            else:
                individual_rs.append(r)
            pooled_own.extend(own)
            pooled_free_riders.extend(free_rider_counts)
    mean_r = (
        sum(individual_rs) / len(individual_rs) if individual_rs else float("nan")
    )
    pooled_r, n_pairs = pearson_r(pooled_own, pooled_free_riders)
    return ReciprocityMetrics(
        mean_individual_r=mean_r,
        subjects_used=len(individual_rs),
        subjects_excluded=excluded,
        pooled_free_rider_r=pooled_r,
        n_pairs=n_pairs,
    )
