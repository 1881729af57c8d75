import { describe, expect, it } from "vitest";

import {
  decodeServerFrame,
  encodeAck,
  encodeJoin,
  encodeSubmit,
  ProtocolError,
} from "../src/protocol.js";
import { renderFeedback } from "../src/view.js";

// captured verbatim from a live server session (session treatment, round 3)
const CAPTURED_FEEDBACK =
  '{"type":"round_feedback","round":3,"view":{"round":3,"own_contribution":40,' +
  '"others_in_group_sum":80,"earnings_from_private":60.0,"earnings_from_group":60.0,' +
  '"own_round_earnings_total":120.0,"group_panel":[{"tokens":55,"own":false},' +
  '{"tokens":40,"own":true},{"tokens":25,"own":false},{"tokens":0,"own":false}],' +
  '"session_panel":[[{"tokens":55,"own":false},{"tokens":40,"own":true},' +
  '{"tokens":25,"own":false},{"tokens":0,"own":false}],[{"tokens":60,"own":false},' +
  '{"tokens":50,"own":false},{"tokens":10,"own":false},{"tokens":5,"own":false}],' +
  '[{"tokens":30,"own":false},{"tokens":20,"own":false},{"tokens":20,"own":false},' +
  '{"tokens":0,"own":false}]]}}';

describe("decodeServerFrame", () => {
  it("decodes a captured feedback frame and its panels verbatim", () => {
    const msg = decodeServerFrame(CAPTURED_FEEDBACK);
    expect(msg.type).toBe("round_feedback");
    if (msg.type !== "round_feedback") return;
    expect(msg.round).toBe(3);
    expect(msg.view.group_panel.map((e) => e.tokens)).toEqual([55, 40, 25, 0]);
    expect(msg.view.session_panel).toHaveLength(3);
    const display = renderFeedback(msg.view, "session");
    expect(display.sessionClusters![0]).toEqual(display.groupBoxes);
    expect(display.breakdown.total).toBe(120);
  });

  it("decodes the administrative frames", () => {
    expect(
      decodeServerFrame(
        '{"type":"joined","phase":"lobby","round":0,"endowment":100,' +
          '"rounds":80,"treatment":"group","protocol_version":1}',
      ),
    ).toMatchObject({ type: "joined", treatment: "group", rounds: 80 });
    expect(
      decodeServerFrame('{"type":"endowment_notice","round":4,"endowment":100}'),
    ).toEqual({ type: "endowment_notice", round: 4, endowment: 100 });
    expect(
      decodeServerFrame('{"type":"reject","reason":"sum-mismatch","detail":"x"}'),
    ).toEqual({ type: "reject", reason: "sum-mismatch", detail: "x" });
    expect(
      decodeServerFrame(
        '{"type":"session_complete","total_tokens":8000.0,"currency_amount":2560.0}',
      ),
    ).toEqual({ type: "session_complete", total_tokens: 8000, currency_amount: 2560 });
    expect(
      decodeServerFrame('{"type":"session_aborted","reason":"operator abort"}'),
    ).toEqual({ type: "session_aborted", reason: "operator abort" });
  });

  it("rejects malformed frames", () => {
    for (const bad of [
      "not json",
      "[1,2]",
      '"joined"',
      '{"round":1}',
      '{"type":"mystery"}',
      '{"type":"joined","phase":"lobby"}',
      '{"type":"endowment_notice","round":"four","endowment":100}',
    ]) {
      expect(() => decodeServerFrame(bad)).toThrow(ProtocolError);
    }
  });

  it("rejects a feedback frame with a corrupt panel", () => {
    const corrupt = CAPTURED_FEEDBACK.replace('"own":true', '"own":"yes"');
    expect(corrupt).not.toBe(CAPTURED_FEEDBACK);
    expect(() => decodeServerFrame(corrupt)).toThrow(ProtocolError);
  });
});

describe("client frame encoding", () => {
  it("encodes the join handshake with the protocol version", () => {
    expect(JSON.parse(encodeJoin("seat-07"))).toEqual({
      type: "join",
      token: "seat-07",
      protocol_version: 1,
    });
  });

  it("encodes a validated allocation as plain integers", () => {
    expect(JSON.parse(encodeSubmit(60, 40))).toEqual({
      type: "submit",
      private_tokens: 60,
      group_tokens: 40,
    });
  });

  it("refuses to encode an unvalidated fractional allocation", () => {
    expect(() => encodeSubmit(40.5, 59.5)).toThrow(ProtocolError);
  });

  it("encodes the feedback acknowledgement", () => {
    expect(JSON.parse(encodeAck())).toEqual({ type: "ack_feedback" });
  });
});
