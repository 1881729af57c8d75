/**
 * Client side of the session wire protocol, version 1.
 *
 * Mirrors PROTOCOL.md in the repository root: every frame is one JSON
 * object with a "type" tag. This module owns the strict decoding of
 * server frames and the encoding of the three client frames; nothing
 * else in the client touches raw JSON.
 */

export const PROTOCOL_VERSION = 1;

export type Treatment = "group" | "session";

export interface PanelEntry {
  tokens: number;
  own: boolean;
}

export interface FeedbackView {
  round: number;
  own_contribution: number;
  others_in_group_sum: number;
  earnings_from_private: number;
  earnings_from_group: number;
  own_round_earnings_total: number;
  group_panel: PanelEntry[];
  session_panel: PanelEntry[][] | null;
}

export interface Joined {
  type: "joined";
  phase: string;
  round: number;
  endowment: number;
  rounds: number;
  treatment: Treatment;
  protocol_version: number;
}

export interface EndowmentNotice {
  type: "endowment_notice";
  round: number;
  endowment: number;
}

export interface Reject {
  type: "reject";
  reason: string;
  detail: string;
}

export interface RoundFeedback {
  type: "round_feedback";
  round: number;
  view: FeedbackView;
}

export interface SessionComplete {
  type: "session_complete";
  total_tokens: number;
  currency_amount: number;
}

export interface SessionAborted {
  type: "session_aborted";
  reason: string;
}

export type ServerMessage =
  | Joined
  | EndowmentNotice
  | Reject
  | RoundFeedback
  | SessionComplete
  | SessionAborted;

export class ProtocolError extends Error {}

function asObject(value: unknown, what: string): Record<string, unknown> {
  if (typeof value !== "object" || value === null || Array.isArray(value)) {
    throw new ProtocolError(`${what} must be an object`);
  }
  return value as Record<string, unknown>;
}

function num(obj: Record<string, unknown>, key: string): number {
  const v = obj[key];
  if (typeof v !== "number" || !Number.isFinite(v)) {
    throw new ProtocolError(`field ${key} must be a finite number`);
  }
  return v;
}

function str(obj: Record<string, unknown>, key: string): string {
  const v = obj[key];
  if (typeof v !== "string") {
    throw new ProtocolError(`field ${key} must be a string`);
  }
  return v;
}

function panel(value: unknown, what: string): PanelEntry[] {
  if (!Array.isArray(value)) {
    throw new ProtocolError(`${what} must be an array`);
  }
  return value.map((raw, i) => {
    const entry = asObject(raw, `${what}[${i}]`);
    const own = entry["own"];
    if (typeof own !== "boolean") {
      throw new ProtocolError(`${what}[${i}].own must be a boolean`);
    }
    return { tokens: num(entry, "tokens"), own };
  });
}

function view(value: unknown): FeedbackView {
  const obj = asObject(value, "view");
  const rawClusters = obj["session_panel"];
  let clusters: PanelEntry[][] | null = null;
  if (rawClusters !== null && rawClusters !== undefined) {
    if (!Array.isArray(rawClusters)) {
      throw new ProtocolError("session_panel must be an array or null");
    }
    clusters = rawClusters.map((c, i) => panel(c, `session_panel[${i}]`));
  }
  return {
    round: num(obj, "round"),
    own_contribution: num(obj, "own_contribution"),
    others_in_group_sum: num(obj, "others_in_group_sum"),
    earnings_from_private: num(obj, "earnings_from_private"),
    earnings_from_group: num(obj, "earnings_from_group"),
    own_round_earnings_total: num(obj, "own_round_earnings_total"),
    group_panel: panel(obj["group_panel"], "group_panel"),
    session_panel: clusters,
  };
}

/** Decode one server frame; throws ProtocolError on anything off-spec. */
export function decodeServerFrame(text: string): ServerMessage {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (exc) {
    throw new ProtocolError(`invalid JSON: ${exc}`);
  }
  const obj = asObject(raw, "frame");
  const tag = obj["type"];
  switch (tag) {
    case "joined": {
      const treatment = str(obj, "treatment");
      if (treatment !== "group" && treatment !== "session") {
        throw new ProtocolError(`unknown treatment ${treatment}`);
      }
      return {
        type: "joined",
        phase: str(obj, "phase"),
        round: num(obj, "round"),
        endowment: num(obj, "endowment"),
        rounds: num(obj, "rounds"),
        treatment,
        protocol_version: num(obj, "protocol_version"),
      };
    }
    case "endowment_notice":
      return {
        type: "endowment_notice",
        round: num(obj, "round"),
        endowment: num(obj, "endowment"),
      };
    case "reject":
      return {
        type: "reject",
        reason: str(obj, "reason"),
        detail: typeof obj["detail"] === "string" ? (obj["detail"] as string) : "",
      };
    case "round_feedback":
      return {
        type: "round_feedback",
        round: num(obj, "round"),
        view: view(obj["view"]),
      };
    case "session_complete":
      return {
        type: "session_complete",
        total_tokens: num(obj, "total_tokens"),
        currency_amount: num(obj, "currency_amount"),
      };
    case "session_aborted":
      return { type: "session_aborted", reason: str(obj, "reason") };
    default:
      throw new ProtocolError(`unknown server frame type ${JSON.stringify(tag)}`);
  }
}

export function encodeJoin(token: string): string {
  return JSON.stringify({
    type: "join",
    token,
    protocol_version: PROTOCOL_VERSION,
  });
}

export function encodeSubmit(privateTokens: number, groupTokens: number): string {
  if (!Number.isInteger(privateTokens) || !Number.isInteger(groupTokens)) {
    throw new ProtocolError("allocation must be validated before encoding");
  }
  return JSON.stringify({
    type: "submit",
    private_tokens: privateTokens,
    group_tokens: groupTokens,
  });
}

export function encodeAck(): string {
  return JSON.stringify({ type: "ack_feedback" });
}
