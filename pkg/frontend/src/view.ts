/**
 * Pure view logic: allocation entry validation and the feedback display
 * model. Both are plain data in, plain data out, so the treatment
 * hygiene rules are testable without a DOM.
 */

import type { FeedbackView, PanelEntry, Treatment } from "./protocol.js";

export type ViolationReason =
  | "not-a-number"
  | "non-integer"
  | "negative"
  | "sum-mismatch";

export type AllocationCheck =
  | { ok: true; privateTokens: number; groupTokens: number }
  | { ok: false; reason: ViolationReason; message: string };

function parseField(raw: string | number): number | "not-a-number" {
  if (typeof raw === "number") {
    return Number.isFinite(raw) ? raw : "not-a-number";
  }
  const trimmed = raw.trim();
  // Number("") is 0; an empty box is not an entry
  if (trimmed === "" || !/^[+-]?\d+(\.\d+)?$/.test(trimmed)) {
    return "not-a-number";
  }
  return Number(trimmed);
}

/**
 * The sum rule: both fields nonnegative integers adding up to the
 * endowment. Submission must stay disabled unless this returns ok.
 */
export function validateAllocation(
  privateField: string | number,
  groupField: string | number,
  endowment: number,
): AllocationCheck {
  const priv = parseField(privateField);
  const grp = parseField(groupField);
  if (priv === "not-a-number" || grp === "not-a-number") {
    return {
      ok: false,
      reason: "not-a-number",
      message: "both boxes need a number",
    };
  }
  if (!Number.isInteger(priv) || !Number.isInteger(grp)) {
    return {
      ok: false,
      reason: "non-integer",
      message: "tokens are whole numbers",
    };
  }
  if (priv < 0 || grp < 0) {
    return { ok: false, reason: "negative", message: "tokens cannot be negative" };
  }
  if (priv + grp !== endowment) {
    return {
      ok: false,
      reason: "sum-mismatch",
      message: `the two amounts must sum to ${endowment} (currently ${priv + grp})`,
    };
  }
  return { ok: true, privateTokens: priv, groupTokens: grp };
}

export class TreatmentMismatchError extends Error {}

export interface FeedbackDisplay {
  round: number;
  /** Own group's four contributions, sorted by the server, own flagged. */
  groupBoxes: PanelEntry[];
  /** Three clusters of four under session feedback; absent under group. */
  sessionClusters: PanelEntry[][] | null;
  othersSum: number;
  breakdown: {
    fromPrivate: number;
    fromGroup: number;
    total: number;
  };
}

/**
 * Shape a received view for the screen. The display model contains
 * nothing beyond the view itself, and a view from the wrong treatment
 * is a client-side error, never silently shown.
 */
export function renderFeedback(
  view: FeedbackView,
  treatment: Treatment,
): FeedbackDisplay {
  if (treatment === "group" && view.session_panel !== null) {
    throw new TreatmentMismatchError(
      "session panel received under group feedback",
    );
  }
  if (treatment === "session" && view.session_panel === null) {
    throw new TreatmentMismatchError(
      "session panel missing under session feedback",
    );
  }
  return {
    round: view.round,
    groupBoxes: view.group_panel,
    sessionClusters: treatment === "session" ? view.session_panel : null,
    othersSum: view.others_in_group_sum,
    breakdown: {
      fromPrivate: view.earnings_from_private,
      fromGroup: view.earnings_from_group,
      total: view.own_round_earnings_total,
    },
  };
}

/**
 * Instructions text; the feedback paragraph is the only part that
 * differs between treatments.
 */
export function instructionsText(
  treatment: Treatment,
  endowment: number,
  rounds: number,
): string {
  const feedbackParagraph =
    treatment === "group"
      ? "At the end of each round you will see the four contributions made " +
        "in your own group, with your own contribution highlighted."
      : "At the end of each round you will see all twelve contributions in " +
        "the session, displayed group by group, with your own contribution " +
        "highlighted.";
  return [
    `This session has ${rounds} rounds. In every round you receive ` +
      `${endowment} tokens and divide them between a private account and ` +
      `a group account. The two amounts must sum to your endowment.`,
    "Each token in your private account is worth one token to you. The " +
      "group account total is doubled and divided equally among the four " +
      "members of your group.",
    "Groups are formed again at random every round, and nobody is ever " +
      "told who was in which group.",
    feedbackParagraph,
    "The record sheet at the bottom of the screen keeps your per-round " +
      "history; your final payment converts your token total at the " +
      "posted rate.",
  ].join("\n\n");
}
