from __future__ import annotations

import json
from decimal import Decimal

import pytest

from vcmlab import SessionConfig, SnapshotError, StructuralError, convert_tokens
from vcmlab.server.protocol import (
    AckFeedback,
    encode_message,
    EndowmentNotice,
    Join,
    Joined,
    RejectSubmission,
    RoundFeedback,
    SessionAborted,
    SessionComplete,
    SubmitAllocation,
)
from vcmlab.server.state import (
    Phase,
    handle_message,
    new_session_state,
    operator_abort,
    recover_state,
    snapshot_state,
    state_to_log,
    status_summary,
)
from vcmlab.simulate import validate_log

TOKENS = tuple(f"tok-{i:02d}" for i in range(12))


def fresh_state(rounds_T=3, seed=7):
    config = SessionConfig(rounds_T=rounds_T, seed=seed)
    return new_session_state(config, TOKENS, session_id="live-test", seed=seed,
                             created_at="2026-02-02T10:00:00+00:00")


def join_all(state):
    outs = []
    for tok in TOKENS:
        tr = handle_message(state, tok, Join(token=tok, protocol_version=1))
        outs.extend(tr.outbound)
    return outs


def submit_all(state, group_tokens=0):
    outs = []
    e = state.config.endowment_e
    for tok in TOKENS:
        tr = handle_message(
            state, tok,
            SubmitAllocation(private_tokens=e - group_tokens,
                             group_tokens=group_tokens),
        )
        outs.extend(tr.outbound)
    return outs


def ack_all(state):
    outs = []
    for tok in TOKENS:
        tr = handle_message(state, tok, AckFeedback())
        outs.extend(tr.outbound)
    return outs


class TestHappyPath:
    def test_lobby_fills_then_round_one_opens(self):
        state = fresh_state()
        outs = join_all(state)
        assert state.phase is Phase.ROUND_OPEN
        assert state.round == 1
        joined_msgs = [m for _, m in outs if isinstance(m, Joined)]
        assert len(joined_msgs) == 12
        notices = [m for _, m in outs if isinstance(m, EndowmentNotice)]
        assert len(notices) == 12
        assert all(n.round == 1 and n.endowment == 100 for n in notices)

    def test_round_closes_on_twelfth_submission(self):
        state = fresh_state()
        join_all(state)
        outs = submit_all(state, group_tokens=40)
        assert state.phase is Phase.FEEDBACK_PENDING
        feedback = [m for _, m in outs if isinstance(m, RoundFeedback)]
        assert len(feedback) == 12
        view = feedback[0].view
        assert view.own_contribution == 40
        assert view.others_in_group_sum == 120
        assert view.own_round_earnings_total == 60 + 160 * 0.5

    def test_complete_session_produces_a_valid_log(self):
        state = fresh_state(rounds_T=3)
        join_all(state)
        final = []
        for _ in range(3):
            submit_all(state, group_tokens=0)
            final = ack_all(state)
        assert state.phase is Phase.FINISHED
        done = [m for _, m in final if isinstance(m, SessionComplete)]
        assert len(done) == 12
        assert done[0].total_tokens == 300.0
        assert done[0].currency_amount == float(convert_tokens(300, 0.32))
        log = state_to_log(state)
        assert log.complete
        validate_log(log)

    def test_feedback_ack_opens_the_next_round(self):
        state = fresh_state()
        join_all(state)
        submit_all(state)
        outs = ack_all(state)
        assert state.phase is Phase.ROUND_OPEN
        assert state.round == 2
        notices = [m for _, m in outs if isinstance(m, EndowmentNotice)]
        assert [n.round for n in notices] == [2] * 12


class TestRejections:
    def check_rejected(self, state, token, msg, reason):
        before = status_summary(state)
        tr = handle_message(state, token, msg)
        assert tr.changed is False
        ((recipient, reply),) = tr.outbound
        assert recipient == token
        assert isinstance(reply, RejectSubmission)
        assert reply.reason == reason
        assert status_summary(state) == before

    def test_bad_protocol_version(self):
        state = fresh_state()
        self.check_rejected(state, TOKENS[0],
                            Join(token=TOKENS[0], protocol_version=99),
                            "bad-version")

    def test_unknown_token(self):
        state = fresh_state()
        self.check_rejected(state, "tok-nope",
                            Join(token="tok-nope", protocol_version=1),
                            "unknown-token")

    def test_join_token_channel_mismatch(self):
        state = fresh_state()
        self.check_rejected(state, TOKENS[0],
                            Join(token=TOKENS[1], protocol_version=1),
                            "malformed")

    def test_submit_before_join(self):
        state = fresh_state()
        self.check_rejected(state, TOKENS[0],
                            SubmitAllocation(private_tokens=50, group_tokens=50),
                            "unknown-token")

    def test_submit_in_lobby(self):
        state = fresh_state()
        handle_message(state, TOKENS[0], Join(token=TOKENS[0], protocol_version=1))
        self.check_rejected(state, TOKENS[0],
                            SubmitAllocation(private_tokens=50, group_tokens=50),
                            "out-of-phase")

    def test_sum_mismatch(self):
        state = fresh_state()
        join_all(state)
        self.check_rejected(state, TOKENS[0],
                            SubmitAllocation(private_tokens=60, group_tokens=50),
                            "sum-mismatch")

    def test_negative_allocation(self):
        state = fresh_state()
        join_all(state)
        self.check_rejected(state, TOKENS[0],
                            SubmitAllocation(private_tokens=-10, group_tokens=110),
                            "negative")

    def test_duplicate_submission(self):
        state = fresh_state()
        join_all(state)
        handle_message(state, TOKENS[0],
                       SubmitAllocation(private_tokens=50, group_tokens=50))
        self.check_rejected(state, TOKENS[0],
                            SubmitAllocation(private_tokens=30, group_tokens=70),
                            "duplicate")

    def test_ack_outside_feedback_phase(self):
        state = fresh_state()
        join_all(state)
        self.check_rejected(state, TOKENS[0], AckFeedback(), "out-of-phase")

    def test_duplicate_ack(self):
        state = fresh_state()
        join_all(state)
        submit_all(state)
        handle_message(state, TOKENS[0], AckFeedback())
        self.check_rejected(state, TOKENS[0], AckFeedback(), "duplicate")

    def test_rejection_does_not_lose_progress(self):
        state = fresh_state()
        join_all(state)
        for tok in TOKENS[:5]:
            handle_message(state, tok,
                           SubmitAllocation(private_tokens=80, group_tokens=20))
        self.check_rejected(state, TOKENS[0],
                            SubmitAllocation(private_tokens=80, group_tokens=20),
                            "duplicate")
        assert len(state.submissions) == 5


class TestRejoin:
    def test_rejoin_replays_the_pending_prompt(self):
        state = fresh_state()
        join_all(state)
        tr = handle_message(state, TOKENS[3],
                            Join(token=TOKENS[3], protocol_version=1))
        assert tr.changed is False
        kinds = [type(m).__name__ for _, m in tr.outbound]
        assert kinds == ["Joined", "EndowmentNotice"]
        assert tr.outbound[1][1].round == 1

    def test_rejoin_after_submitting_has_nothing_to_replay(self):
        state = fresh_state()
        join_all(state)
        handle_message(state, TOKENS[3],
                       SubmitAllocation(private_tokens=50, group_tokens=50))
        tr = handle_message(state, TOKENS[3],
                            Join(token=TOKENS[3], protocol_version=1))
        kinds = [type(m).__name__ for _, m in tr.outbound]
        assert kinds == ["Joined"]
        assert tr.outbound[0][1].phase == "round_open"

    def test_rejoin_during_feedback_replays_the_identical_view(self):
        state = fresh_state()
        join_all(state)
        first = submit_all(state, group_tokens=25)
        original = next(m for tok, m in first
                        if tok == TOKENS[7] and isinstance(m, RoundFeedback))
        tr = handle_message(state, TOKENS[7],
                            Join(token=TOKENS[7], protocol_version=1))
        replayed = tr.outbound[1][1]
        assert isinstance(replayed, RoundFeedback)
        # the wire frame is what the participant sees; it must be identical
        assert encode_message(replayed) == encode_message(original)


class TestGroupDrawTiming:
    def test_partition_independent_of_submission_order(self):
        logs = []
        for order in (list(range(12)), list(reversed(range(12)))):
            state = fresh_state(rounds_T=1, seed=13)
            join_all(state)
            e = state.config.endowment_e
            for sid in order:
                handle_message(state, TOKENS[sid],
                               SubmitAllocation(private_tokens=e, group_tokens=0))
            ack_all(state)
            logs.append(state_to_log(state))
        assert logs[0].records == logs[1].records

    def test_partitions_vary_across_rounds(self):
        state = fresh_state(rounds_T=3, seed=1)
        join_all(state)
        partitions = []
        for _ in range(3):
            submit_all(state)
            chunk = state.records[-12:]
            partitions.append(tuple(r.group_id for r in chunk))
            ack_all(state)
        assert len(set(partitions)) > 1


class TestAbort:
    def test_abort_notifies_joined_and_freezes_the_machine(self):
        state = fresh_state()
        join_all(state)
        tr = operator_abort(state, reason="fire alarm")
        assert state.phase is Phase.ABORTED
        aborted = [m for _, m in tr.outbound if isinstance(m, SessionAborted)]
        assert len(aborted) == 12
        assert aborted[0].reason == "fire alarm"
        after = handle_message(state, TOKENS[0],
                               SubmitAllocation(private_tokens=50, group_tokens=50))
        assert after.changed is False
        assert after.outbound[0][1].reason == "out-of-phase"

    def test_abort_after_finish_is_a_no_op(self):
        state = fresh_state(rounds_T=1)
        join_all(state)
        submit_all(state)
        ack_all(state)
        tr = operator_abort(state)
        assert tr.changed is False
        assert state.phase is Phase.FINISHED


class TestSnapshots:
    def advance_to_round(self, state, rounds):
        join_all(state)
        for _ in range(rounds):
            submit_all(state, group_tokens=30)
            ack_all(state)

    def test_snapshot_recover_round_trip_is_byte_identical(self, tmp_path):
        state = fresh_state(rounds_T=4, seed=3)
        self.advance_to_round(state, 2)
        first = snapshot_state(state, tmp_path)
        original_bytes = first.read_bytes()
        recovered = recover_state(tmp_path)
        again = snapshot_state(recovered, tmp_path / "second")
        assert again.read_bytes() == original_bytes

    def test_recovered_machine_continues_identically(self, tmp_path):
        twin_a = fresh_state(rounds_T=3, seed=5)
        twin_b = fresh_state(rounds_T=3, seed=5)
        for state in (twin_a, twin_b):
            join_all(state)
            submit_all(state, group_tokens=10)
            ack_all(state)
        snapshot_state(twin_a, tmp_path)
        resumed = recover_state(tmp_path)
        for state in (resumed, twin_b):
            submit_all(state, group_tokens=60)
            ack_all(state)
            submit_all(state, group_tokens=0)
            ack_all(state)
        assert resumed.phase is Phase.FINISHED
        assert state_to_log(resumed) == state_to_log(twin_b)

    def test_missing_snapshot(self, tmp_path):
        with pytest.raises(SnapshotError, match="no snapshot"):
            recover_state(tmp_path)

    def test_corrupt_snapshot_reports_last_valid_round(self, tmp_path):
        state = fresh_state(rounds_T=4, seed=3)
        join_all(state)
        submit_all(state)
        ack_all(state)          # round 1 complete
        snapshot_state(state, tmp_path)
        submit_all(state)
        ack_all(state)          # round 2 complete
        snapshot_state(state, tmp_path)  # prev := round-1 snapshot
        target = tmp_path / "snapshot.json"
        doc = json.loads(target.read_text())
        doc["state"]["round"] = 99  # checksum now lies
        target.write_text(json.dumps(doc))
        with pytest.raises(SnapshotError, match="last valid round: 1"):
            recover_state(tmp_path)

    def test_tampered_payload_detected_by_checksum(self, tmp_path):
        state = fresh_state()
        join_all(state)
        path = snapshot_state(state, tmp_path)
        text = path.read_text().replace('"round": 1', '"round": 7')
        assert '"round": 7' in text  # substitution really happened
        path.write_text(text)
        with pytest.raises(SnapshotError):
            recover_state(tmp_path)


class TestConstruction:
    def test_token_count_must_match(self):
        with pytest.raises(StructuralError):
            new_session_state(SessionConfig(), TOKENS[:5])

    def test_tokens_must_be_distinct(self):
        with pytest.raises(StructuralError):
            new_session_state(SessionConfig(), (TOKENS[0],) * 12)
