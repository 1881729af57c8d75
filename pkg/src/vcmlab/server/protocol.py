"""Wire protocol for live sessions.

Every frame is one UTF-8 JSON object with a "type" tag (the transport,
WebSocket text frames, length-delimits them). Inbound types: "join",
"submit", "ack_feedback". Outbound: "joined", "endowment_notice", "reject",
"round_feedback", "session_complete", "session_aborted". Field names and
reject reasons are frozen in PROTOCOL.md at the repository root; the schema
version is negotiated in the join handshake.

No outbound message ever carries another participant's token, identity, or
any stable cross-round label: feedback panels are plain token amounts,
sorted descending, with only the receiver's own entry flagged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from ..game import FeedbackView, PanelEntry

__all__ = [
    "PROTOCOL_VERSION",
    "REJECT_REASONS",
    "ProtocolViolation",
    "Join",
    "SubmitAllocation",
    "AckFeedback",
    "Joined",
    "EndowmentNotice",
    "RejectSubmission",
    "RoundFeedback",
    "SessionComplete",
    "SessionAborted",
    "ProtocolMessage",
    "encode_message",
    "decode_message",
    "view_to_payload",
    "view_from_payload",
]

PROTOCOL_VERSION = 1

REJECT_REASONS = (
    "sum-mismatch",
    "negative",
    "non-integer",
    "out-of-phase",
    "duplicate",
    "unknown-token",
    "bad-version",
    "malformed",
)


class ProtocolViolation(Exception):
    """A frame that cannot be accepted; maps onto a reject reason."""

    def __init__(self, reason: str, detail: str = "") -> None:
        assert reason in REJECT_REASONS
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason
        self.detail = detail


# inbound ------------------------------------------------------------------

@dataclass(frozen=True)
class Join:
    token: str
    protocol_version: int


@dataclass(frozen=True)
class SubmitAllocation:
    private_tokens: int
    group_tokens: int


@dataclass(frozen=True)
class AckFeedback:
    pass


# outbound -----------------------------------------------------------------

@dataclass(frozen=True)
class Joined:
    phase: str
    round: int
    endowment: int
    rounds: int
    treatment: str
    protocol_version: int = PROTOCOL_VERSION


@dataclass(frozen=True)
class EndowmentNotice:
    round: int
    endowment: int


@dataclass(frozen=True)
class RejectSubmission:
    reason: str
    detail: str = ""


@dataclass(frozen=True)
class RoundFeedback:
    round: int
    view: FeedbackView


@dataclass(frozen=True)
class SessionComplete:
    total_tokens: float
    currency_amount: float


@dataclass(frozen=True)
class SessionAborted:
    reason: str


ProtocolMessage = (
    Join | SubmitAllocation | AckFeedback | Joined | EndowmentNotice
    | RejectSubmission | RoundFeedback | SessionComplete | SessionAborted
)

INBOUND_TAGS = ("join", "submit", "ack_feedback")


def view_to_payload(view: FeedbackView) -> dict:
    def panel(entries: tuple[PanelEntry, ...]) -> list[dict]:
        return [{"tokens": e.tokens, "own": e.own} for e in entries]

    return {
        "round": view.round,
        "own_contribution": view.own_contribution,
        "others_in_group_sum": view.others_in_group_sum,
        "earnings_from_private": view.earnings_from_private,
        "earnings_from_group": view.earnings_from_group,
        "own_round_earnings_total": view.own_round_earnings_total,
        "group_panel": panel(view.group_panel),
        "session_panel": (
            None
            if view.session_panel is None
            else [panel(cluster) for cluster in view.session_panel]
        ),
    }


def view_from_payload(payload: dict, subject_id: int = -1) -> FeedbackView:
    def panel(entries: list[dict]) -> tuple[PanelEntry, ...]:
        return tuple(PanelEntry(tokens=e["tokens"], own=e["own"]) for e in entries)

    return FeedbackView(
        subject_id=subject_id,
        round=payload["round"],
        own_contribution=payload["own_contribution"],
        others_in_group_sum=payload["others_in_group_sum"],
        earnings_from_private=payload["earnings_from_private"],
        earnings_from_group=payload["earnings_from_group"],
        own_round_earnings_total=payload["own_round_earnings_total"],
        group_panel=panel(payload["group_panel"]),
        session_panel=(
            None
            if payload["session_panel"] is None
            else tuple(panel(cluster) for cluster in payload["session_panel"])
        ),
    )


def encode_message(msg: ProtocolMessage) -> str:
    if isinstance(msg, Join):
        payload = {"type": "join", "token": msg.token,
                   "protocol_version": msg.protocol_version}
    elif isinstance(msg, SubmitAllocation):
        payload = {"type": "submit", "private_tokens": msg.private_tokens,
                   "group_tokens": msg.group_tokens}
    elif isinstance(msg, AckFeedback):
        payload = {"type": "ack_feedback"}
    elif isinstance(msg, Joined):
        payload = {"type": "joined", "phase": msg.phase, "round": msg.round,
                   "endowment": msg.endowment, "rounds": msg.rounds,
                   "treatment": msg.treatment,
                   "protocol_version": msg.protocol_version}
    elif isinstance(msg, EndowmentNotice):
        payload = {"type": "endowment_notice", "round": msg.round,
                   "endowment": msg.endowment}
    elif isinstance(msg, RejectSubmission):
        payload = {"type": "reject", "reason": msg.reason, "detail": msg.detail}
    elif isinstance(msg, RoundFeedback):
        payload = {"type": "round_feedback", "round": msg.round,
                   "view": view_to_payload(msg.view)}
    elif isinstance(msg, SessionComplete):
        payload = {"type": "session_complete", "total_tokens": msg.total_tokens,
                   "currency_amount": msg.currency_amount}
    elif isinstance(msg, SessionAborted):
        payload = {"type": "session_aborted", "reason": msg.reason}
    else:
        raise TypeError(f"not a protocol message: {msg!r}")
    return json.dumps(payload, separators=(",", ":"))


def _require_int(payload: dict, key: str) -> int:
    value = payload.get(key)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ProtocolViolation("non-integer", f"{key} must be an integer")
    return value


def decode_message(text: str) -> ProtocolMessage:
    """Decode one frame (either direction). Raises ProtocolViolation."""
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProtocolViolation("malformed", f"invalid JSON: {exc}") from exc
    if not isinstance(payload, dict) or "type" not in payload:
        raise ProtocolViolation("malformed", "frame must be an object with a 'type'")
    tag = payload["type"]
    try:
        if tag == "join":
            token = payload.get("token")
            if not isinstance(token, str) or not token:
                raise ProtocolViolation("malformed", "join needs a token string")
            version = payload.get("protocol_version")
            if not isinstance(version, int) or isinstance(version, bool):
                raise ProtocolViolation("malformed", "join needs a protocol_version")
            return Join(token=token, protocol_version=version)
        if tag == "submit":
            return SubmitAllocation(
                private_tokens=_require_int(payload, "private_tokens"),
                group_tokens=_require_int(payload, "group_tokens"),
            )
        if tag == "ack_feedback":
            return AckFeedback()
        if tag == "joined":
            return Joined(
                phase=payload["phase"], round=payload["round"],
                endowment=payload["endowment"], rounds=payload["rounds"],
                treatment=payload["treatment"],
                protocol_version=payload["protocol_version"],
            )
        if tag == "endowment_notice":
            return EndowmentNotice(round=payload["round"], endowment=payload["endowment"])
        if tag == "reject":
            return RejectSubmission(reason=payload["reason"],
                                    detail=payload.get("detail", ""))
        if tag == "round_feedback":
            return RoundFeedback(round=payload["round"],
                                 view=view_from_payload(payload["view"]))
        if tag == "session_complete":
            return SessionComplete(total_tokens=payload["total_tokens"],
                                   currency_amount=payload["currency_amount"])
        if tag == "session_aborted":
            return SessionAborted(reason=payload["reason"])
    except KeyError as exc:
        raise ProtocolViolation("malformed", f"missing field {exc}") from exc
    raise ProtocolViolation("malformed", f"unknown message type {tag!r}")
