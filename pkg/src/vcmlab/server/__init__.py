"""Live-session server: wire protocol, state machine, WebSocket transport."""

from .app import ServeConfig, SessionRuntime, create_app, parse_serve_config
from .protocol import (
    PROTOCOL_VERSION,
    AckFeedback,
    EndowmentNotice,
    Join,
    Joined,
    ProtocolMessage,
    ProtocolViolation,
    RejectSubmission,
    RoundFeedback,
    SessionAborted,
    SessionComplete,
    SubmitAllocation,
    decode_message,
    encode_message,
)
from .state import (
    Phase,
    SessionState,
    Transition,
    handle_message,
    new_session_state,
    operator_abort,
    recover_state,
    snapshot_state,
    state_to_log,
    status_summary,
)

__all__ = [
    "ServeConfig",
    "SessionRuntime",
    "create_app",
    "parse_serve_config",
    "PROTOCOL_VERSION",
    "AckFeedback",
    "EndowmentNotice",
    "Join",
    "Joined",
    "ProtocolMessage",
    "ProtocolViolation",
    "RejectSubmission",
    "RoundFeedback",
    "SessionAborted",
    "SessionComplete",
    "SubmitAllocation",
    "decode_message",
    "encode_message",
    "Phase",
    "SessionState",
    "Transition",
    "handle_message",
    "new_session_state",
    "operator_abort",
    "recover_state",
    "snapshot_state",
    "state_to_log",
    "status_summary",
]
