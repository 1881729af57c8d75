"""Drive a live session end to end, including a mid-session crash.

Hosts the real server app in-process, connects twelve scripted
participants over WebSockets, plays a short session, kills the server
after round 2, restarts it on the same output directory, and shows that
the participants rejoin and finish. The final log passes the validator.

Run: python3 demos/live_session_walkthrough.py [--out DIR]
"""

from __future__ import annotations

import argparse
import json
import tempfile
from contextlib import ExitStack
from pathlib import Path

from starlette.testclient import TestClient

from vcmlab.server.app import SessionRuntime, create_app, parse_serve_config
from vcmlab.simulate import read_log_jsonl, validate_log

ROUNDS = 4
TOKENS = [f"seat-{i:02d}" for i in range(12)]
SERVE_DOC = {
    "session": {"rounds_T": ROUNDS, "treatment": "session", "seed": 5},
    "tokens": TOKENS,
    "session_id": "walkthrough",
    "seed": 5,
    "created_at": "2026-08-15T09:00:00+00:00",
}


def join_all(stack: ExitStack, client: TestClient):
    sockets = []
    for tok in TOKENS:
        ws = stack.enter_context(client.websocket_connect("/ws"))
        ws.send_text(json.dumps(
            {"type": "join", "token": tok, "protocol_version": 1}))
        joined = json.loads(ws.receive_text())
        assert joined["type"] == "joined"
        sockets.append(ws)
    notices = [json.loads(ws.receive_text()) for ws in sockets]
    print(f"  12 participants joined; round {notices[0]['round']} open "
          f"with endowment {notices[0]['endowment']}")
    return sockets


def play_round(sockets, round_no: int) -> None:
    for sid, ws in enumerate(sockets):
        c = 5 * sid            # seat 0 free-rides, seat 11 gives 55
        ws.send_text(json.dumps({"type": "submit",
                                 "private_tokens": 100 - c,
                                 "group_tokens": c}))
    feedback = [json.loads(ws.receive_text()) for ws in sockets]
    view = feedback[3]["view"]
    clusters = view["session_panel"]
    print(f"  round {round_no} resolved; seat 03 sees own group "
          f"{[e['tokens'] for e in view['group_panel']]}, earned "
          f"{view['own_round_earnings_total']:.1f} tokens, "
          f"{len(clusters)} clusters on the session panel")
    for ws in sockets:
        ws.send_text(json.dumps({"type": "ack_feedback"}))
    # next endowment notice, or session_complete after the last round
    return [json.loads(ws.receive_text()) for ws in sockets]


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", type=Path,
                        default=Path(tempfile.mkdtemp(prefix="vcm-live-")))
    args = parser.parse_args()

    serve = parse_serve_config(SERVE_DOC)
    print(f"session directory: {args.out}")

    print("first server process:")
    runtime = SessionRuntime.from_serve_config(serve, args.out)
    with TestClient(create_app(runtime)) as client:
        with ExitStack() as stack:
            sockets = join_all(stack, client)
            for round_no in (1, 2):
                play_round(sockets, round_no)
        print(f"  status: {client.get('/status').json()}")
    print("  ...server killed with round 3 open\n")

    print("second server process, same directory:")
    revived = SessionRuntime.from_serve_config(serve, args.out)
    print(f"  recovered snapshot at phase {revived.state.phase.value}, "
          f"round {revived.state.round}")
    with TestClient(create_app(revived)) as client:
        with ExitStack() as stack:
            sockets = join_all(stack, client)
            for round_no in range(3, ROUNDS + 1):
                final = play_round(sockets, round_no)
        print(f"  seat 00 finished with {final[0]['total_tokens']} tokens "
              f"= {final[0]['currency_amount']} currency units")
        print(f"  status: {client.get('/status').json()}")

    log = read_log_jsonl(args.out / "walkthrough.jsonl")
    validate_log(log)
    print(f"\nfinal log: {len(log.records)} records, complete={log.complete}, "
          "validator happy")


if __name__ == "__main__":
    main()
