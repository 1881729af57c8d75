"""Session simulator and the canonical log format.

A simulated session drives 12 agents through T rounds: regroup, decide,
pay, record. Logs are persisted as JSON lines: one header line, then one
record per (round, subject) with fields (session_id, round, subject_id,
group_id, contribution, earnings). Live sessions persist the identical
schema, so every analysis tool downstream is source-agnostic.

Reproducibility: replication r of a run derives its generators from
``SeedSequence(seed, spawn_key=(r,))`` spawned into 13 child streams, one
for group draws and one per agent. Batches are therefore order-independent
and safe to parallelize.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .agents import (
    AgentKind,
    AgentSpec,
    CoefficientRecord,
    HistoryView,
    InitialDraw,
    agent_decide,
)
from .errors import DomainError, StructuralError
from .game import (
    ContributionRecord,
    GroupAssignment,
    SessionConfig,
    Treatment,
    assign_groups,
    compute_round_payoffs,
)
from .presets import REFERENCE_ESTIMATES, tobit_agent_from_reference

__all__ = [
    "RunSpec",
    "SessionLog",
    "BatchResult",
    "run_session",
    "run_batch",
    "validate_log",
    "write_log_jsonl",
    "read_log_jsonl",
    "write_log_csv",
    "read_log_csv",
    "config_to_dict",
    "config_from_dict",
    "parse_run_spec",
    "roster_descriptor",
    "history_view_for",
]

LOG_SCHEMA = 1


@dataclass(frozen=True)
class RunSpec:
    """A batch of simulated sessions sharing one config and roster."""

    config: SessionConfig
    roster: tuple[AgentSpec, ...]
    replications: int = 1
    seed: int = 0
    label: str = "sim"

    def __post_init__(self) -> None:
        if len(self.roster) != self.config.session_size:
            raise StructuralError(
                f"roster has {len(self.roster)} agents, config needs "
                f"{self.config.session_size}"
            )
        if self.replications < 1:
            raise DomainError(f"replications must be >= 1, got {self.replications}")


@dataclass
class SessionLog:
    """Header plus one ContributionRecord per (round, subject)."""

    session_id: str
    config: SessionConfig
    roster: str          # compact descriptor, or "live"
    seed: int | None
    created_at: str
    complete: bool
    records: list[ContributionRecord] = field(default_factory=list)
    schema: int = LOG_SCHEMA

    def per_subject_totals(self) -> dict[int, float]:
        totals: dict[int, float] = {}
        for rec in self.records:
            totals[rec.subject_id] = totals.get(rec.subject_id, 0.0) + rec.earnings
        return totals

    def contributions_by_round(self) -> dict[int, dict[int, int]]:
        rounds: dict[int, dict[int, int]] = {}
        for rec in self.records:
            rounds.setdefault(rec.round, {})[rec.subject_id] = rec.contribution
        return rounds

    def groups_by_round(self) -> dict[int, dict[int, int]]:
        rounds: dict[int, dict[int, int]] = {}
        for rec in self.records:
            rounds.setdefault(rec.round, {})[rec.subject_id] = rec.group_id
        return rounds


@dataclass(frozen=True)
class BatchResult:
    logs: tuple[SessionLog, ...]
    per_round_means: tuple[float, ...]


def roster_descriptor(roster: Sequence[AgentSpec]) -> str:
    """Collapse a roster into "3x free_rider + 9x tobit_latent" form."""
    parts: list[str] = []
    i = 0
    while i < len(roster):
        j = i
        while j < len(roster) and roster[j] == roster[i]:
            j += 1
        parts.append(f"{j - i}x {roster[i].kind.value}")
        i = j
    return " + ".join(parts)


def history_view_for(
    config: SessionConfig,
    subject_id: int,
    round: int,
    contributions: Mapping[int, Mapping[int, int]],
    groups: Mapping[int, Mapping[int, int]],
    first_round_contributions: Mapping[int, int],
) -> HistoryView:
    """Build the information set for one subject deciding the given round.

    Everything refers to round t-1: the mean over the other members of the
    subject's previous group, and (session treatment only) the zero/full
    counts among the other session members. In round 2 the t-2 lag is
    bootstrapped to the t-1 value.
    """
    if round == 1:
        return HistoryView()
    prev = round - 1
    prev_x = contributions[prev]
    prev_groups = groups[prev]
    own_gid = prev_groups[subject_id]
    others = [
        prev_x[sid]
        for sid, gid in prev_groups.items()
        if gid == own_gid and sid != subject_id
    ]
    own_lag1 = prev_x[subject_id]
    own_lag2 = contributions[round - 2][subject_id] if round >= 3 else own_lag1
    view = HistoryView(
        own_first=first_round_contributions[subject_id],
        own_lag1=own_lag1,
        own_lag2=own_lag2,
        mean_others_lag1=sum(others) / len(others),
    )
    if config.treatment is Treatment.SESSION:
        rest = [x for sid, x in prev_x.items() if sid != subject_id]
        view = replace(
            view,
            zero_count_lag1=sum(1 for x in rest if x == 0),
            full_count_lag1=sum(1 for x in rest if x == config.endowment_e),
        )
    return view


def run_session(
    spec: RunSpec,
    replication: int = 0,
    created_at: str | None = None,
) -> SessionLog:
    """Run one complete session; deterministic in (spec.seed, replication)."""
    config = spec.config
    size = config.session_size
    streams = np.random.SeedSequence(spec.seed, spawn_key=(replication,)).spawn(size + 1)
    group_rng = np.random.default_rng(streams[0])
    agent_rngs = [np.random.default_rng(s) for s in streams[1:]]

    session_id = f"{spec.label}-r{replication:03d}"
    log = SessionLog(
        session_id=session_id,
        config=config,
        roster=roster_descriptor(spec.roster),
        seed=spec.seed,
        created_at=created_at
        or datetime.now(timezone.utc).isoformat(timespec="seconds"),
        complete=False,
    )
    contributions: dict[int, dict[int, int]] = {}
    groups: dict[int, dict[int, int]] = {}
    first_round: dict[int, int] = {}

    for t in range(1, config.rounds_T + 1):
        assignment = assign_groups(config, range(size), group_rng, round=t)
        xs: list[int] = []
        for sid in range(size):
            view = history_view_for(config, sid, t, contributions, groups, first_round)
            xs.append(
                agent_decide(
                    spec.roster[sid], view, t, agent_rngs[sid], config.endowment_e
                )
            )
        earnings = compute_round_payoffs(config, assignment, xs)
        contributions[t] = {sid: xs[sid] for sid in range(size)}
        groups[t] = {sid: assignment.partition[sid] for sid in range(size)}
        if t == 1:
            first_round = contributions[1]
        for sid in range(size):
            log.records.append(
                ContributionRecord(
                    session_id=session_id,
                    round=t,
                    subject_id=sid,
                    group_id=assignment.partition[sid],
                    contribution=xs[sid],
                    earnings=earnings[sid],
                )
            )
    log.complete = True
    return log


def run_batch(
    spec: RunSpec,
    out_dir: str | Path | None = None,
    created_at: str | None = None,
) -> BatchResult:
    """Run all replications; optionally persist logs and the mean trajectory.

    The summary is the arithmetic mean contribution per round pooled over
    all subjects of all replications.
    """
    logs = [run_session(spec, r, created_at=created_at) for r in range(spec.replications)]
    T = spec.config.rounds_T
    sums = [0.0] * T
    counts = [0] * T
    for log in logs:
        for rec in log.records:
            sums[rec.round - 1] += rec.contribution
            counts[rec.round - 1] += 1
    means = tuple(s / c for s, c in zip(sums, counts))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for log in logs:
            write_log_jsonl(log, out / f"{log.session_id}.jsonl")
        with open(out / f"{spec.label}-summary.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["round", "mean_contribution"])
            for t, m in enumerate(means, start=1):
                writer.writerow([t, repr(m)])
    return BatchResult(logs=tuple(logs), per_round_means=means)


def validate_log(log: SessionLog) -> None:
    """Check structure and re-derive every earnings figure, demanding exact equality.

    Raises StructuralError (shape, ordering, partition defects) or
    DomainError (value defects). Incomplete live logs (aborted sessions) fail
    validation by design.
    """
    config = log.config
    size = config.session_size
    if not log.complete:
        raise StructuralError(f"log {log.session_id} is marked incomplete")
    expected = config.rounds_T * size
    if len(log.records) != expected:
        raise StructuralError(
            f"log {log.session_id} has {len(log.records)} records, expected {expected}"
        )
    keys = [(rec.round, rec.subject_id) for rec in log.records]
    if keys != sorted(keys):
        raise StructuralError("records are not sorted by (round, subject_id)")
    for t in range(1, config.rounds_T + 1):
        chunk = log.records[(t - 1) * size : t * size]
        if [r.subject_id for r in chunk] != list(range(size)) or any(
            r.round != t for r in chunk
        ):
            raise StructuralError(f"round {t} does not cover every subject exactly once")
        partition = tuple(r.group_id for r in chunk)
        assignment = GroupAssignment(round=t, partition=partition)
        assignment.check(config)
        xs = [config.validate_contribution(r.contribution) for r in chunk]
        recomputed = compute_round_payoffs(config, assignment, xs)
        for rec, expect in zip(chunk, recomputed):
            if rec.earnings != expect:
                raise DomainError(
                    f"round {t} subject {rec.subject_id}: earnings {rec.earnings} "
                    f"!= recomputed {expect}"
                )


# --- persistence ---------------------------------------------------------

def config_to_dict(config: SessionConfig) -> dict:
    return {
        "endowment_e": config.endowment_e,
        "multiplier_g": config.multiplier_g,
        "group_size_n": config.group_size_n,
        "group_count_G": config.group_count_G,
        "rounds_T": config.rounds_T,
        "treatment": config.treatment.value,
        "conversion_rate": config.conversion_rate,
        "seed": config.seed,
    }


def config_from_dict(data: Mapping) -> SessionConfig:
    known = {
        "endowment_e", "multiplier_g", "group_size_n", "group_count_G",
        "rounds_T", "treatment", "conversion_rate", "seed",
    }
    unknown = set(data) - known
    if unknown:
        raise StructuralError(f"unknown session config keys: {sorted(unknown)}")
    kwargs = dict(data)
    if "treatment" in kwargs:
        kwargs["treatment"] = Treatment.parse(kwargs["treatment"])
    return SessionConfig(**kwargs)


def _header_dict(log: SessionLog) -> dict:
    return {
        "schema": log.schema,
        "kind": "vcm-session-log",
        "session_id": log.session_id,
        "config": config_to_dict(log.config),
        "roster": log.roster,
        "seed": log.seed,
        "created_at": log.created_at,
        "complete": log.complete,
    }


def write_log_jsonl(log: SessionLog, path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(_header_dict(log)) + "\n")
        for rec in log.records:
            fh.write(
                json.dumps(
                    {
                        "session_id": rec.session_id,
                        "round": rec.round,
                        "subject_id": rec.subject_id,
                        "group_id": rec.group_id,
                        "contribution": rec.contribution,
                        "earnings": rec.earnings,
                    }
                )
                + "\n"
            )
    return path


def read_log_jsonl(path: str | Path) -> SessionLog:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            lines = [line for line in fh if line.strip()]
        header = json.loads(lines[0])
        if header.get("kind") != "vcm-session-log":
            raise StructuralError(f"{path}: not a session log (kind={header.get('kind')!r})")
        if header.get("schema") != LOG_SCHEMA:
            raise StructuralError(f"{path}: unsupported schema {header.get('schema')!r}")
        log = SessionLog(
            session_id=header["session_id"],
            config=config_from_dict(header["config"]),
            roster=header["roster"],
            seed=header["seed"],
            created_at=header["created_at"],
            complete=header["complete"],
        )
        for line in lines[1:]:
            raw = json.loads(line)
            log.records.append(
                ContributionRecord(
                    session_id=raw["session_id"],
                    round=int(raw["round"]),
                    subject_id=int(raw["subject_id"]),
                    group_id=int(raw["group_id"]),
                    contribution=int(raw["contribution"]),
                    earnings=float(raw["earnings"]),
                )
            )
        return log
    except (json.JSONDecodeError, KeyError, IndexError) as exc:
        raise StructuralError(f"cannot parse session log {path}: {exc}") from exc


CSV_COLUMNS = ["session_id", "round", "subject_id", "group_id", "contribution", "earnings"]


def write_log_csv(log: SessionLog, path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for rec in log.records:
            writer.writerow(
                [rec.session_id, rec.round, rec.subject_id, rec.group_id,
                 rec.contribution, repr(rec.earnings)]
            )
    return path


def read_log_csv(path: str | Path, config: SessionConfig) -> SessionLog:
    """Ingest the CSV export. The header line carries no config, so it must be given."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_COLUMNS:
            raise StructuralError(
                f"{path}: expected columns {CSV_COLUMNS}, got {reader.fieldnames}"
            )
        rows = list(reader)
    if not rows:
        raise StructuralError(f"{path}: no records")
    log = SessionLog(
        session_id=rows[0]["session_id"],
        config=config,
        roster="csv-import",
        seed=None,
        created_at="",
        complete=True,
    )
    for raw in rows:
        log.records.append(
            ContributionRecord(
                session_id=raw["session_id"],
                round=int(raw["round"]),
                subject_id=int(raw["subject_id"]),
                group_id=int(raw["group_id"]),
                contribution=int(raw["contribution"]),
                earnings=float(raw["earnings"]),
            )
        )
    return log


# --- run-configuration files ---------------------------------------------

def _agent_from_dict(raw: Mapping) -> AgentSpec:
    known = {"kind", "count", "coefficients", "noise_sigma", "initial_draw"}
    unknown = set(raw) - known
    if unknown:
        raise StructuralError(f"unknown roster entry keys: {sorted(unknown)}")
    kind = AgentKind.parse(raw["kind"])
    kwargs: dict = {"kind": kind}
    coeffs = raw.get("coefficients")
    if isinstance(coeffs, str):
        if coeffs not in REFERENCE_ESTIMATES:
            raise DomainError(f"unknown coefficient preset {coeffs!r}")
        kwargs["coefficients"] = REFERENCE_ESTIMATES[coeffs].coefficient_record()
    elif isinstance(coeffs, Mapping):
        kwargs["coefficients"] = CoefficientRecord(**coeffs)
    elif coeffs is not None:
        raise StructuralError(f"coefficients must be a preset label or mapping, got {coeffs!r}")
    if "noise_sigma" in raw:
        kwargs["noise_sigma"] = float(raw["noise_sigma"])
    if "initial_draw" in raw:
        kwargs["initial_draw"] = InitialDraw(**raw["initial_draw"])
    return AgentSpec(**kwargs)


def parse_run_spec(source: Mapping | str | Path) -> RunSpec:
    """Build a RunSpec from a declarative JSON document (or parsed mapping).

    Document shape::

        {
          "session": { ...SessionConfig fields... },
          "roster": [
            {"kind": "free_rider", "count": 3},
            {"kind": "tobit_latent", "count": 9,
             "coefficients": "us_session", "noise_sigma": 20}
          ],
          "replications": 50,
          "seed": 42,
          "label": "demo"
        }

    Roster entries expand via their "count" (default 1); "coefficients" is
    either a reference-cell label or an explicit mapping of record fields.
    """
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            data = json.load(fh)
    else:
        data = dict(source)
    known = {"session", "roster", "replications", "seed", "label"}
    unknown = set(data) - known
    if unknown:
        raise StructuralError(f"unknown run config keys: {sorted(unknown)}")
    config = config_from_dict(data.get("session", {}))
    roster: list[AgentSpec] = []
    for raw in data.get("roster", []):
        agent = _agent_from_dict(raw)
        roster.extend([agent] * int(raw.get("count", 1)))
    return RunSpec(
        config=config,
        roster=tuple(roster),
        replications=int(data.get("replications", 1)),
        seed=int(data.get("seed", config.seed)),
        label=str(data.get("label", "sim")),
    )
