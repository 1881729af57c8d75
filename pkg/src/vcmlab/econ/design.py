"""Regression design built from session logs.

One row per (subject, round >= 3): the contribution regressed on the own
first-round contribution, own lags t-1 and t-2, the over/under-contribution
gaps against last round's group mean, and (session-feedback logs only) the
counts of zero and full contributors among the other session members at
t-1. Clustering is by participant, with cluster ids qualified by session so
pooled logs keep subjects distinct.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ..errors import StructuralError
from ..game import SessionConfig, Treatment
from ..simulate import SessionLog

__all__ = ["DesignRow", "build_design", "design_arrays", "BASE_REGRESSORS", "SESSION_REGRESSORS"]

BASE_REGRESSORS = ("intercept", "own_first", "own_lag1", "own_lag2", "over_lag1", "under_lag1")
SESSION_REGRESSORS = BASE_REGRESSORS + ("zero_count_lag1", "full_count_lag1")


@dataclass(frozen=True)
class DesignRow:
    subject_id: int
    round: int
    y: float
    x_first: float
    x_lag1: float
    x_lag2: float
    over_lag1: float
    under_lag1: float
    zero_count_lag1: int | None
    full_count_lag1: int | None
    cluster_id: str

    @property
    def has_session_counts(self) -> bool:
        return self.zero_count_lag1 is not None


def _rows_for_log(log: SessionLog) -> Iterable[DesignRow]:
    config = log.config
    contributions = log.contributions_by_round()
    groups = log.groups_by_round()
    size = config.session_size
    if set(contributions) != set(range(1, config.rounds_T + 1)):
        raise StructuralError(f"log {log.session_id} is missing rounds")
    session_counts = config.treatment is Treatment.SESSION
    for t in range(3, config.rounds_T + 1):
        prev_x = contributions[t - 1]
        prev_groups = groups[t - 1]
        for sid in range(size):
            own_gid = prev_groups[sid]
            others = [
                prev_x[o]
                for o, gid in prev_groups.items()
                if gid == own_gid and o != sid
            ]
            mean_others = sum(others) / len(others)
            own_lag1 = prev_x[sid]
            if session_counts:
                rest = [x for o, x in prev_x.items() if o != sid]
                zero_count = sum(1 for x in rest if x == 0)
                full_count = sum(1 for x in rest if x == config.endowment_e)
            else:
                zero_count = full_count = None
            yield DesignRow(
                subject_id=sid,
                round=t,
                y=float(contributions[t][sid]),
                x_first=float(contributions[1][sid]),
                x_lag1=float(own_lag1),
                x_lag2=float(contributions[t - 2][sid]),
                over_lag1=max(float(own_lag1) - mean_others, 0.0),
                under_lag1=max(mean_others - float(own_lag1), 0.0),
                zero_count_lag1=zero_count,
                full_count_lag1=full_count,
                cluster_id=f"{log.session_id}:{sid}",
            )


def build_design(logs: SessionLog | Sequence[SessionLog]) -> list[DesignRow]:
    """Rows for one log or a pooled cell of logs (rounds 3..T each)."""
    if isinstance(logs, SessionLog):
        logs = [logs]
    if not logs:
        raise StructuralError("no logs given")
    treatments = {log.config.treatment for log in logs}
    if len(treatments) > 1:
        raise StructuralError("cannot pool logs across treatments")
    rows: list[DesignRow] = []
    for log in logs:
        rows.extend(_rows_for_log(log))
    return rows


def design_arrays(
    rows: Sequence[DesignRow],
) -> tuple[np.ndarray, np.ndarray, tuple[str, ...], np.ndarray]:
    """(y, X, regressor names, cluster ids) as arrays ready for estimation.

    The session-count columns are included iff the rows carry them; a mix of
    row shapes is structural breakage.
    """
    if not rows:
        raise StructuralError("no design rows")
    with_counts = {row.has_session_counts for row in rows}
    if len(with_counts) > 1:
        raise StructuralError("rows mix session-count and plain feature sets")
    names = SESSION_REGRESSORS if with_counts.pop() else BASE_REGRESSORS
    y = np.array([row.y for row in rows], dtype=float)
    cols = [
        np.ones(len(rows)),
        np.array([row.x_first for row in rows], dtype=float),
        np.array([row.x_lag1 for row in rows], dtype=float),
        np.array([row.x_lag2 for row in rows], dtype=float),
        np.array([row.over_lag1 for row in rows], dtype=float),
        np.array([row.under_lag1 for row in rows], dtype=float),
    ]
    if names is SESSION_REGRESSORS:
        cols.append(np.array([row.zero_count_lag1 for row in rows], dtype=float))
        cols.append(np.array([row.full_count_lag1 for row in rows], dtype=float))
    X = np.column_stack(cols)
    clusters = np.array([row.cluster_id for row in rows])
    return y, X, names, clusters
