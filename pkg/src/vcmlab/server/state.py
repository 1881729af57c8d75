"""Authoritative state machine of one live session.

Phases: Lobby -> RoundOpen(t) -> FeedbackPending(t) -> ... -> Finished,
with Aborted reachable from anywhere via the operator. All messages are
applied serially through ``handle_message``; rejected messages never change
state. Groups are drawn only after the 12th valid submission of a round
(participants cannot condition on the draw, so the late draw is
behaviorally equivalent and follows the run-sheet literally).

Snapshots capture the complete machine - submissions, acknowledgements,
records, the RNG bit-generator state, creation timestamp - so recovery
resumes exactly where the process died and never re-randomizes a completed
round. Snapshot writes are write-then-rename; the previous good snapshot is
kept beside the current one so a corrupt file can still report the last
valid round.
"""

from __future__ import annotations

import hashlib
import json
import os
import shutil
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import SnapshotError, StructuralError
from ..game import (
    ContributionRecord,
    SessionConfig,
    assign_groups,
    build_feedback,
    compute_round_payoffs,
    convert_tokens,
)
from ..simulate import SessionLog, config_from_dict, config_to_dict
from . import protocol
from .protocol import (
    AckFeedback,
    EndowmentNotice,
    Join,
    Joined,
    ProtocolMessage,
    RejectSubmission,
    RoundFeedback,
    SessionAborted,
    SessionComplete,
    SubmitAllocation,
)

__all__ = [
    "Phase",
    "SessionState",
    "Transition",
    "new_session_state",
    "handle_message",
    "operator_abort",
    "status_summary",
    "state_to_log",
    "snapshot_state",
    "recover_state",
    "SNAPSHOT_NAME",
]

SNAPSHOT_NAME = "snapshot.json"
PREVIOUS_SNAPSHOT_NAME = "snapshot.prev.json"
SNAPSHOT_SCHEMA = 1


class Phase(str, Enum):
    LOBBY = "lobby"
    ROUND_OPEN = "round_open"
    FEEDBACK_PENDING = "feedback_pending"
    FINISHED = "finished"
    ABORTED = "aborted"


@dataclass
class SessionState:
    config: SessionConfig
    session_id: str
    tokens: tuple[str, ...]          # valid join tokens; index = subject_id
    seed: int
    created_at: str
    rng_state: dict
    phase: Phase = Phase.LOBBY
    round: int = 0
    joined: set[int] = field(default_factory=set)
    submissions: dict[int, int] = field(default_factory=dict)  # sid -> group tokens
    acks: set[int] = field(default_factory=set)
    records: list[ContributionRecord] = field(default_factory=list)
    pending: dict[int, str | None] = field(default_factory=dict)  # encoded frame awaiting a response
    complete: bool = False
    abort_reason: str | None = None

    def subject_of(self, token: str) -> int | None:
        try:
            return self.tokens.index(token)
        except ValueError:
            return None


@dataclass(frozen=True)
class Transition:
    state: SessionState
    outbound: tuple[tuple[str, ProtocolMessage], ...]  # (recipient token, message)
    changed: bool


def new_session_state(
    config: SessionConfig,
    tokens: Sequence[str],
    session_id: str = "live",
    seed: int | None = None,
    created_at: str = "",
) -> SessionState:
    tokens = tuple(tokens)
    if len(tokens) != config.session_size or len(set(tokens)) != len(tokens):
        raise StructuralError(
            f"need {config.session_size} distinct join tokens, got {len(tokens)}"
        )
    seed = config.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    return SessionState(
        config=config,
        session_id=session_id,
        tokens=tokens,
        seed=seed,
        created_at=created_at,
        rng_state=rng.bit_generator.state,
    )


def _broadcast(state: SessionState, msg_for: dict[int, ProtocolMessage]):
    return tuple((state.tokens[sid], msg) for sid, msg in sorted(msg_for.items()))


def _open_round(state: SessionState, round_no: int) -> tuple[tuple[str, ProtocolMessage], ...]:
    state.phase = Phase.ROUND_OPEN
    state.round = round_no
    state.submissions = {}
    state.acks = set()
    notices: dict[int, ProtocolMessage] = {}
    for sid in range(state.config.session_size):
        msg = EndowmentNotice(round=round_no, endowment=state.config.endowment_e)
        state.pending[sid] = protocol.encode_message(msg)
        notices[sid] = msg
    return _broadcast(state, notices)


def _close_round(state: SessionState) -> tuple[tuple[str, ProtocolMessage], ...]:
    """The 12th submission arrived: draw groups, pay, record, send feedback."""
    config = state.config
    rng = np.random.Generator(np.random.PCG64())
    rng.bit_generator.state = state.rng_state
    assignment = assign_groups(config, range(config.session_size), rng, round=state.round)
    state.rng_state = rng.bit_generator.state
    xs = [state.submissions[sid] for sid in range(config.session_size)]
    earnings = compute_round_payoffs(config, assignment, xs)
    for sid in range(config.session_size):
        state.records.append(
            ContributionRecord(
                session_id=state.session_id,
                round=state.round,
                subject_id=sid,
                group_id=assignment.partition[sid],
                contribution=xs[sid],
                earnings=earnings[sid],
            )
        )
    state.phase = Phase.FEEDBACK_PENDING
    state.acks = set()
    feedback: dict[int, ProtocolMessage] = {}
    for sid in range(config.session_size):
        view = build_feedback(config, assignment, xs, earnings, sid)
        msg = RoundFeedback(round=state.round, view=view)
        state.pending[sid] = protocol.encode_message(msg)
        feedback[sid] = msg
    return _broadcast(state, feedback)


def _finish(state: SessionState) -> tuple[tuple[str, ProtocolMessage], ...]:
    state.phase = Phase.FINISHED
    state.complete = True
    totals: dict[int, float] = {sid: 0.0 for sid in range(state.config.session_size)}
    for rec in state.records:
        totals[rec.subject_id] += rec.earnings
    out: dict[int, ProtocolMessage] = {}
    for sid, tokens_earned in totals.items():
        msg = SessionComplete(
            total_tokens=tokens_earned,
            currency_amount=float(
                convert_tokens(tokens_earned, state.config.conversion_rate)
            ),
        )
        state.pending[sid] = protocol.encode_message(msg)
        out[sid] = msg
    return _broadcast(state, out)


def handle_message(
    state: SessionState,
    sender_token: str,
    msg: ProtocolMessage,
) -> Transition:
    """Apply one inbound message; returns the state and routed replies.

    The state object is updated in place and returned inside the
    Transition. Rejections leave the state untouched (changed=False), which
    also tells the persistence layer no snapshot is needed.
    """

    def reject(reason: str, detail: str = "") -> Transition:
        return Transition(
            state=state,
            outbound=((sender_token, RejectSubmission(reason=reason, detail=detail)),),
            changed=False,
        )

    if state.phase is Phase.ABORTED:
        return reject("out-of-phase", "session aborted")

    if isinstance(msg, Join):
        if msg.protocol_version != protocol.PROTOCOL_VERSION:
            return reject(
                "bad-version",
                f"server speaks protocol {protocol.PROTOCOL_VERSION}",
            )
        if msg.token != sender_token:
            return reject("malformed", "join token does not match the channel")
        sid = state.subject_of(msg.token)
        if sid is None:
            return reject("unknown-token")
        ack = Joined(
            phase=state.phase.value,
            round=state.round,
            endowment=state.config.endowment_e,
            rounds=state.config.rounds_T,
            treatment=state.config.treatment.value,
        )
        outbound: list[tuple[str, ProtocolMessage]] = [(sender_token, ack)]
        if sid in state.joined:
            # rejoin: idempotently re-deliver whatever the subject still has to act on
            pending = state.pending.get(sid)
            if pending is not None:
                outbound.append((sender_token, protocol.decode_message(pending)))
            return Transition(state=state, outbound=tuple(outbound), changed=False)
        state.joined.add(sid)
        if state.phase is Phase.LOBBY and len(state.joined) == state.config.session_size:
            outbound.extend(_open_round(state, 1))
        return Transition(state=state, outbound=tuple(outbound), changed=True)

    sid = state.subject_of(sender_token)
    if sid is None or sid not in state.joined:
        return reject("unknown-token", "join first")

    if isinstance(msg, SubmitAllocation):
        if state.phase is not Phase.ROUND_OPEN:
            return reject("out-of-phase", f"phase is {state.phase.value}")
        if sid in state.submissions:
            return reject("duplicate", "already submitted this round")
        if msg.private_tokens < 0 or msg.group_tokens < 0:
            return reject("negative", "token amounts must be >= 0")
        if msg.private_tokens + msg.group_tokens != state.config.endowment_e:
            return reject(
                "sum-mismatch",
                f"allocation must sum to {state.config.endowment_e}",
            )
        state.submissions[sid] = msg.group_tokens
        state.pending[sid] = None
        outbound = ()
        if len(state.submissions) == state.config.session_size:
            outbound = _close_round(state)
        return Transition(state=state, outbound=outbound, changed=True)

    if isinstance(msg, AckFeedback):
        if state.phase is not Phase.FEEDBACK_PENDING:
            return reject("out-of-phase", f"phase is {state.phase.value}")
        if sid in state.acks:
            return reject("duplicate", "feedback already acknowledged")
        state.acks.add(sid)
        state.pending[sid] = None
        outbound = ()
        if len(state.acks) == state.config.session_size:
            if state.round < state.config.rounds_T:
                outbound = _open_round(state, state.round + 1)
            else:
                outbound = _finish(state)
        return Transition(state=state, outbound=outbound, changed=True)

    return reject("malformed", f"unexpected message {type(msg).__name__}")


def operator_abort(state: SessionState, reason: str = "operator abort") -> Transition:
    if state.phase in (Phase.FINISHED, Phase.ABORTED):
        return Transition(state=state, outbound=(), changed=False)
    state.phase = Phase.ABORTED
    state.abort_reason = reason
    state.complete = False
    msg = SessionAborted(reason=reason)
    outbound = tuple((state.tokens[sid], msg) for sid in sorted(state.joined))
    for sid in state.joined:
        state.pending[sid] = protocol.encode_message(msg)
    return Transition(state=state, outbound=outbound, changed=True)


def status_summary(state: SessionState) -> dict:
    return {
        "session_id": state.session_id,
        "phase": state.phase.value,
        "round": state.round,
        "joined": len(state.joined),
        "submissions": len(state.submissions),
        "acks": len(state.acks),
        "records": len(state.records),
        "complete": state.complete,
    }


def state_to_log(state: SessionState) -> SessionLog:
    return SessionLog(
        session_id=state.session_id,
        config=state.config,
        roster="live",
        seed=state.seed,
        created_at=state.created_at,
        complete=state.complete,
        records=list(state.records),
    )


# --- persistence ------------------------------------------------------------

def _state_payload(state: SessionState) -> dict:
    return {
        "config": config_to_dict(state.config),
        "session_id": state.session_id,
        "tokens": list(state.tokens),
        "seed": state.seed,
        "created_at": state.created_at,
        "rng_state": _jsonable(state.rng_state),
        "phase": state.phase.value,
        "round": state.round,
        "joined": sorted(state.joined),
        "submissions": {str(k): v for k, v in state.submissions.items()},
        "acks": sorted(state.acks),
        "records": [
            [r.session_id, r.round, r.subject_id, r.group_id, r.contribution, r.earnings]
            for r in state.records
        ],
        "pending": {str(k): v for k, v in state.pending.items()},
        "complete": state.complete,
        "abort_reason": state.abort_reason,
    }


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (np.integer,)):
        return int(value)
    return value


def snapshot_state(state: SessionState, directory: str | Path) -> Path:
    """Write the snapshot atomically, keeping the previous good one beside it."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    target = directory / SNAPSHOT_NAME
    payload = _state_payload(state)
    body = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    document = json.dumps(
        {
            "kind": "session-snapshot",
            "schema": SNAPSHOT_SCHEMA,
            "sha256": hashlib.sha256(body.encode()).hexdigest(),
            "state": payload,
        },
        sort_keys=True,
    )
    if target.exists():
        shutil.copyfile(target, directory / PREVIOUS_SNAPSHOT_NAME)
    tmp = directory / (SNAPSHOT_NAME + ".tmp")
    tmp.write_text(document, encoding="utf-8")
    os.replace(tmp, target)
    return target


def _parse_snapshot(path: Path) -> SessionState:
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
        if document.get("kind") != "session-snapshot" or document.get("schema") != SNAPSHOT_SCHEMA:
            raise SnapshotError(f"{path}: not a session snapshot")
        payload = document["state"]
        body = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        if hashlib.sha256(body.encode()).hexdigest() != document["sha256"]:
            raise SnapshotError(f"{path}: checksum mismatch")
        return SessionState(
            config=config_from_dict(payload["config"]),
            session_id=payload["session_id"],
            tokens=tuple(payload["tokens"]),
            seed=payload["seed"],
            created_at=payload["created_at"],
            rng_state=payload["rng_state"],
            phase=Phase(payload["phase"]),
            round=payload["round"],
            joined=set(payload["joined"]),
            submissions={int(k): v for k, v in payload["submissions"].items()},
            acks=set(payload["acks"]),
            records=[
                ContributionRecord(
                    session_id=r[0], round=r[1], subject_id=r[2],
                    group_id=r[3], contribution=r[4], earnings=r[5],
                )
                for r in payload["records"]
            ],
            pending={int(k): v for k, v in payload["pending"].items()},
            complete=payload["complete"],
            abort_reason=payload["abort_reason"],
        )
    except SnapshotError:
        raise
    except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
        raise SnapshotError(f"{path}: unreadable snapshot ({exc})") from exc


def recover_state(directory: str | Path) -> SessionState:
    """Restore the exact machine from the snapshot directory.

    A corrupt current snapshot refuses to resume; the error reports the last
    valid round recoverable from the previous snapshot, if any.
    """
    directory = Path(directory)
    target = directory / SNAPSHOT_NAME
    if not target.exists():
        raise SnapshotError(f"no snapshot in {directory}")
    try:
        return _parse_snapshot(target)
    except SnapshotError as exc:
        previous = directory / PREVIOUS_SNAPSHOT_NAME
        last_valid = "unknown"
        if previous.exists():
            try:
                prev_state = _parse_snapshot(previous)
                completed = (
                    prev_state.round
                    if prev_state.phase is Phase.FEEDBACK_PENDING
                    else prev_state.round - 1
                )
                last_valid = str(max(completed, 0))
            except SnapshotError:
                pass
        raise SnapshotError(
            f"refusing to resume: {exc}; last valid round: {last_valid}"
        ) from exc
