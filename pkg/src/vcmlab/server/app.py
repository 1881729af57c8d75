"""WebSocket transport and operator surface around the session state machine.

One ASGI app hosts one session. Participants connect to ``/ws`` and speak
the frame protocol; the operator inspects ``GET /status`` and can
``POST /abort``. Every state-changing message is applied under a lock,
snapshotted before the replies leave, and the final log is written in the
simulator's exact schema the moment the session finishes or aborts. If the
output directory already holds a snapshot, the app resumes it instead of
starting fresh, so a killed server continues exactly where it died.
"""

from __future__ import annotations

import asyncio
import json
import secrets
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from ..game import SessionConfig
from ..simulate import config_from_dict, write_log_jsonl
from . import protocol
from .protocol import Join, ProtocolViolation, RejectSubmission
from .state import (
    Phase,
    SessionState,
    handle_message,
    new_session_state,
    operator_abort,
    recover_state,
    snapshot_state,
    state_to_log,
    status_summary,
)

__all__ = ["ServeConfig", "parse_serve_config", "SessionRuntime", "create_app"]


class ServeConfig:
    """Validated contents of a serve configuration file."""

    def __init__(
        self,
        config: SessionConfig,
        tokens: tuple[str, ...],
        session_id: str = "live",
        seed: int | None = None,
        created_at: str | None = None,
    ) -> None:
        self.config = config
        self.tokens = tokens
        self.session_id = session_id
        self.seed = seed
        self.created_at = created_at


def parse_serve_config(source: Mapping | str | Path) -> ServeConfig:
    """Read the serve file: a "session" block plus tokens and labels.

    Tokens may be omitted; fresh random ones are generated and must then be
    collected from the tokens file the server writes at startup.
    """
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            data = json.load(fh)
    else:
        data = dict(source)
    config = config_from_dict(data.get("session", {}))
    tokens = data.get("tokens")
    if tokens is None:
        tokens = [secrets.token_hex(8) for _ in range(config.session_size)]
    return ServeConfig(
        config=config,
        tokens=tuple(str(t) for t in tokens),
        session_id=str(data.get("session_id", "live")),
        seed=data.get("seed"),
        created_at=data.get("created_at"),
    )


class SessionRuntime:
    """Owns the state machine, the lock serializing messages, and persistence."""

    def __init__(self, state: SessionState, out_dir: str | Path) -> None:
        self.state = state
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.lock = asyncio.Lock()
        self.connections: dict[str, WebSocket] = {}
        self.log_written = False
        snapshot_state(self.state, self.out_dir)

    @classmethod
    def from_serve_config(cls, serve: ServeConfig, out_dir: str | Path) -> "SessionRuntime":
        out = Path(out_dir)
        if (out / "snapshot.json").exists():
            state = recover_state(out)
        else:
            state = new_session_state(
                serve.config,
                serve.tokens,
                session_id=serve.session_id,
                seed=serve.seed,
                created_at=serve.created_at
                or datetime.now(timezone.utc).isoformat(timespec="seconds"),
            )
        runtime = cls(state, out)
        tokens_file = out / "tokens.json"
        if not tokens_file.exists():
            tokens_file.write_text(json.dumps(list(state.tokens), indent=2) + "\n")
        return runtime

    def _persist(self, changed: bool) -> None:
        if not changed:
            return
        snapshot_state(self.state, self.out_dir)
        if self.state.phase in (Phase.FINISHED, Phase.ABORTED) and not self.log_written:
            write_log_jsonl(
                state_to_log(self.state),
                self.out_dir / f"{self.state.session_id}.jsonl",
            )
            self.log_written = True

    async def _route(self, outbound) -> None:
        for token, msg in outbound:
            ws = self.connections.get(token)
            if ws is None:
                continue  # disconnected; the pending store re-delivers on rejoin
            try:
                await ws.send_text(protocol.encode_message(msg))
            except RuntimeError:
                self.connections.pop(token, None)

    async def apply(self, sender_token: str, msg) -> None:
        async with self.lock:
            transition = handle_message(self.state, sender_token, msg)
            self._persist(transition.changed)
            await self._route(transition.outbound)

    async def abort(self, reason: str) -> dict:
        async with self.lock:
            transition = operator_abort(self.state, reason)
            self._persist(transition.changed)
            await self._route(transition.outbound)
            return status_summary(self.state)


def create_app(runtime: SessionRuntime) -> FastAPI:
    app = FastAPI(title="vcm session server")
    app.state.runtime = runtime

    @app.websocket("/ws")
    async def websocket_endpoint(ws: WebSocket) -> None:
        await ws.accept()
        token: str | None = None
        try:
            while True:
                text = await ws.receive_text()
                try:
                    msg = protocol.decode_message(text)
                except ProtocolViolation as violation:
                    await ws.send_text(
                        protocol.encode_message(
                            RejectSubmission(
                                reason=violation.reason, detail=violation.detail
                            )
                        )
                    )
                    continue
                if isinstance(msg, Join):
                    token = msg.token
                    # the channel is claimed even before validation; an invalid
                    # token simply never matches a subject
                    runtime.connections[token] = ws
                    await runtime.apply(token, msg)
                elif token is None:
                    await ws.send_text(
                        protocol.encode_message(
                            RejectSubmission(reason="unknown-token", detail="join first")
                        )
                    )
                else:
                    await runtime.apply(token, msg)
        except WebSocketDisconnect:
            if token is not None and runtime.connections.get(token) is ws:
                runtime.connections.pop(token, None)

    @app.get("/status")
    async def status() -> dict:
        async with runtime.lock:
            return status_summary(runtime.state)

    @app.post("/abort")
    async def abort(payload: dict | None = None) -> dict:
        reason = (payload or {}).get("reason", "operator abort")
        return await runtime.abort(reason)

    return app
