/**
 * Client session state: a pure reducer over inbound server messages.
 *
 * The record sheet grows by exactly one row per completed round, even
 * when a feedback frame is re-delivered after a reconnect, and its
 * running total is what the final screen shows next to the server's own
 * figure.
 */

import type { FeedbackView, ServerMessage, Treatment } from "./protocol.js";

export type ClientPhase =
  | "connecting"
  | "lobby"
  | "round_open"
  | "waiting_for_others"
  | "feedback"
  | "finished"
  | "aborted";

export interface RecordSheetRow {
  round: number;
  ownContribution: number;
  othersSum: number;
  fromPrivate: number;
  fromGroup: number;
  roundEarnings: number;
}

export interface FinalTotals {
  totalTokens: number;
  currencyAmount: number;
}

export interface ClientViewState {
  phase: ClientPhase;
  treatment: Treatment | null;
  round: number;
  rounds: number;
  endowment: number;
  feedback: FeedbackView | null;
  recordSheet: RecordSheetRow[];
  finalTotals: FinalTotals | null;
  lastReject: { reason: string; detail: string } | null;
  abortReason: string | null;
}

export function initialState(): ClientViewState {
  return {
    phase: "connecting",
    treatment: null,
    round: 0,
    rounds: 0,
    endowment: 0,
    feedback: null,
    recordSheet: [],
    finalTotals: null,
    lastReject: null,
    abortReason: null,
  };
}

function sheetRow(view: FeedbackView): RecordSheetRow {
  return {
    round: view.round,
    ownContribution: view.own_contribution,
    othersSum: view.others_in_group_sum,
    fromPrivate: view.earnings_from_private,
    fromGroup: view.earnings_from_group,
    roundEarnings: view.own_round_earnings_total,
  };
}

/** Sum of per-round earnings on the record sheet. */
export function recordSheetTotal(state: ClientViewState): number {
  return state.recordSheet.reduce((acc, row) => acc + row.roundEarnings, 0);
}

/** Mark that the participant's own allocation went out for this round. */
export function allocationSubmitted(state: ClientViewState): ClientViewState {
  if (state.phase !== "round_open") return state;
  return { ...state, phase: "waiting_for_others" };
}

export function applyServerMessage(
  state: ClientViewState,
  msg: ServerMessage,
): ClientViewState {
  switch (msg.type) {
    case "joined": {
      const next: ClientViewState = {
        ...state,
        treatment: msg.treatment,
        rounds: msg.rounds,
        round: msg.round,
        endowment: msg.endowment,
        lastReject: null,
      };
      // phase refines once the pending frame is re-delivered
      if (msg.phase === "lobby") next.phase = "lobby";
      else if (msg.phase === "round_open") next.phase = "round_open";
      else if (msg.phase === "feedback_pending") next.phase = "waiting_for_others";
      else if (msg.phase === "finished") next.phase = "finished";
      else if (msg.phase === "aborted") next.phase = "aborted";
      return next;
    }
    case "endowment_notice":
      return {
        ...state,
        phase: "round_open",
        round: msg.round,
        endowment: msg.endowment,
        feedback: null,
        lastReject: null,
      };
    case "reject": {
      // a rejected allocation leaves the round open for another try;
      // duplicate/out-of-phase mean the seat already counted, keep waiting
      const reopen =
        state.phase === "waiting_for_others" &&
        ["sum-mismatch", "negative", "non-integer"].includes(msg.reason);
      return {
        ...state,
        lastReject: { reason: msg.reason, detail: msg.detail },
        phase: reopen ? "round_open" : state.phase,
      };
    }
    case "round_feedback": {
      const already = state.recordSheet.some((row) => row.round === msg.round);
      return {
        ...state,
        phase: "feedback",
        round: msg.round,
        feedback: msg.view,
        recordSheet: already
          ? state.recordSheet
          : [...state.recordSheet, sheetRow(msg.view)],
        lastReject: null,
      };
    }
    case "session_complete":
      return {
        ...state,
        phase: "finished",
        finalTotals: {
          totalTokens: msg.total_tokens,
          currencyAmount: msg.currency_amount,
        },
      };
    case "session_aborted":
      return { ...state, phase: "aborted", abortReason: msg.reason };
  }
}
