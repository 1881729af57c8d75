from __future__ import annotations

import json

import pytest

from vcmlab.game import FeedbackView, PanelEntry
from vcmlab.server.protocol import (
    PROTOCOL_VERSION,
    AckFeedback,
    EndowmentNotice,
    Join,
    Joined,
    ProtocolViolation,
    RejectSubmission,
    RoundFeedback,
    SessionAborted,
    SessionComplete,
    SubmitAllocation,
    decode_message,
    encode_message,
    view_from_payload,
    view_to_payload,
)


def sample_view(session_panel=None):
    return FeedbackView(
        subject_id=4,
        round=9,
        own_contribution=30,
        others_in_group_sum=150,
        earnings_from_private=70,
        earnings_from_group=90.0,
        own_round_earnings_total=160.0,
        group_panel=(
            PanelEntry(tokens=60, own=False), PanelEntry(tokens=50, own=False),
            PanelEntry(tokens=40, own=False), PanelEntry(tokens=30, own=True),
        ),
        session_panel=session_panel,
    )


ROUND_TRIP_MESSAGES = [
    Join(token="abc123", protocol_version=PROTOCOL_VERSION),
    SubmitAllocation(private_tokens=60, group_tokens=40),
    AckFeedback(),
    Joined(phase="lobby", round=0, endowment=100, rounds=80, treatment="group"),
    EndowmentNotice(round=5, endowment=100),
    RejectSubmission(reason="sum-mismatch", detail="must sum to 100"),
    SessionComplete(total_tokens=9120.5, currency_amount=2918.56),
    SessionAborted(reason="operator abort"),
]


class TestRoundTrips:
    @pytest.mark.parametrize("msg", ROUND_TRIP_MESSAGES,
                             ids=lambda m: type(m).__name__)
    def test_encode_decode_identity(self, msg):
        assert decode_message(encode_message(msg)) == msg

    def test_frames_are_single_line_json(self):
        for msg in ROUND_TRIP_MESSAGES:
            frame = encode_message(msg)
            assert "\n" not in frame
            assert json.loads(frame)["type"]

    def test_feedback_round_trip_drops_only_the_server_side_subject_id(self):
        msg = RoundFeedback(round=9, view=sample_view())
        back = decode_message(encode_message(msg))
        assert back.view.subject_id == -1
        assert back.view.own_contribution == 30
        assert back.view.group_panel == msg.view.group_panel
        assert back.view.session_panel is None

    def test_session_panel_survives_the_wire(self):
        clusters = (
            (PanelEntry(100, False), PanelEntry(80, True),
             PanelEntry(20, False), PanelEntry(0, False)),
            (PanelEntry(90, False), PanelEntry(60, False),
             PanelEntry(60, False), PanelEntry(10, False)),
            (PanelEntry(50, False), PanelEntry(50, False),
             PanelEntry(40, False), PanelEntry(30, False)),
        )
        view = sample_view(session_panel=clusters)
        payload = view_to_payload(view)
        assert len(payload["session_panel"]) == 3
        back = view_from_payload(payload, subject_id=4)
        assert back.session_panel == clusters
        assert back.subject_id == 4


class TestStrictDecoding:
    def test_invalid_json(self):
        with pytest.raises(ProtocolViolation) as err:
            decode_message("{not json")
        assert err.value.reason == "malformed"

    def test_non_object_frame(self):
        with pytest.raises(ProtocolViolation):
            decode_message('["join"]')

    def test_unknown_type(self):
        with pytest.raises(ProtocolViolation) as err:
            decode_message('{"type":"teleport"}')
        assert err.value.reason == "malformed"

    def test_missing_field(self):
        with pytest.raises(ProtocolViolation):
            decode_message('{"type":"endowment_notice","round":3}')

    @pytest.mark.parametrize("value", ['"40"', "40.5", "true", "null"])
    def test_submit_token_counts_must_be_integers(self, value):
        frame = f'{{"type":"submit","private_tokens":60,"group_tokens":{value}}}'
        with pytest.raises(ProtocolViolation) as err:
            decode_message(frame)
        assert err.value.reason == "non-integer"

    def test_join_requires_token_and_version(self):
        with pytest.raises(ProtocolViolation):
            decode_message('{"type":"join","token":""}')
        with pytest.raises(ProtocolViolation):
            decode_message('{"type":"join","token":"x","protocol_version":"1"}')

    def test_integer_valued_floats_are_still_rejected(self):
        # 40.0 == 40 but the wire format is strict
        frame = '{"type":"submit","private_tokens":60.0,"group_tokens":40}'
        with pytest.raises(ProtocolViolation):
            decode_message(frame)
