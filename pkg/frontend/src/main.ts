/**
 * Browser shell: one WebSocket, one state atom, re-render on change.
 *
 * Configuration comes from the query string: ?server=ws://host:port/ws
 * and ?token=seat-xx. Everything below the connection plumbing delegates
 * to the pure modules (protocol, state, view).
 */

import {
  decodeServerFrame,
  encodeAck,
  encodeJoin,
  encodeSubmit,
  ProtocolError,
} from "./protocol.js";
import {
  allocationSubmitted,
  applyServerMessage,
  initialState,
  recordSheetTotal,
  type ClientViewState,
} from "./state.js";
import {
  instructionsText,
  renderFeedback,
  validateAllocation,
  type FeedbackDisplay,
} from "./view.js";

function esc(value: unknown): string {
  return String(value).replace(/[&<>"]/g, (ch) =>
    ch === "&" ? "&amp;" : ch === "<" ? "&lt;" : ch === ">" ? "&gt;" : "&quot;",
  );
}

function boxesHtml(entries: { tokens: number; own: boolean }[]): string {
  return entries
    .map(
      (e) =>
        `<span class="box${e.own ? " own" : ""}">${esc(e.tokens)}</span>`,
    )
    .join("");
}

function feedbackHtml(display: FeedbackDisplay): string {
  const clusters =
    display.sessionClusters === null
      ? ""
      : `<div class="session-panel">` +
        display.sessionClusters
          .map((c) => `<div class="cluster">${boxesHtml(c)}</div>`)
          .join("") +
        `</div>`;
  return `
    <h2>Round ${esc(display.round)} results</h2>
    <div class="group-panel">${boxesHtml(display.groupBoxes)}</div>
    ${clusters}
    <p>Others in your group contributed ${esc(display.othersSum)} tokens.</p>
    <p>You earned ${esc(display.breakdown.fromPrivate)} from your private
       account and ${esc(display.breakdown.fromGroup)} from the group
       account: ${esc(display.breakdown.total)} tokens this round.</p>
    <button id="ack">Continue</button>`;
}

function recordSheetHtml(state: ClientViewState): string {
  if (state.recordSheet.length === 0) return "";
  const rows = state.recordSheet
    .map(
      (r) =>
        `<tr><td>${r.round}</td><td>${r.ownContribution}</td>` +
        `<td>${r.othersSum}</td><td>${r.fromPrivate}</td>` +
        `<td>${r.fromGroup}</td><td>${r.roundEarnings}</td></tr>`,
    )
    .join("");
  return `
    <table class="record-sheet">
      <thead><tr><th>round</th><th>your contribution</th><th>others in group</th>
      <th>from private</th><th>from group</th><th>earnings</th></tr></thead>
      <tbody>${rows}</tbody>
      <tfoot><tr><th colspan="5">total so far</th>
      <th>${recordSheetTotal(state)}</th></tr></tfoot>
    </table>`;
}

function screenHtml(state: ClientViewState): string {
  switch (state.phase) {
    case "connecting":
      return "<p>Connecting…</p>";
    case "lobby":
      return (
        `<pre class="instructions">${esc(
          state.treatment
            ? instructionsText(state.treatment, state.endowment, state.rounds)
            : "",
        )}</pre><p>Waiting for all participants to join…</p>`
      );
    case "round_open": {
      const rejectLine = state.lastReject
        ? `<p class="reject">${esc(state.lastReject.reason)}: ${esc(
            state.lastReject.detail,
          )}</p>`
        : "";
      return `
        <h2>Round ${state.round} of ${state.rounds}</h2>
        <p>You have ${state.endowment} tokens.</p>
        ${rejectLine}
        <label>private account <input id="private" inputmode="numeric"></label>
        <label>group account <input id="group" inputmode="numeric"></label>
        <p id="entry-error" class="reject"></p>
        <button id="submit" disabled>Submit</button>`;
    }
    case "waiting_for_others":
      return `<h2>Round ${state.round}</h2><p>Waiting for the other participants…</p>`;
    case "feedback": {
      if (!state.feedback || !state.treatment) return "<p>…</p>";
      return feedbackHtml(renderFeedback(state.feedback, state.treatment));
    }
    case "finished":
      return state.finalTotals
        ? `<h2>Session complete</h2>
           <p>You earned ${state.finalTotals.totalTokens} tokens,
              paid out as ${state.finalTotals.currencyAmount}.</p>`
        : "<h2>Session complete</h2>";
    case "aborted":
      return `<h2>Session stopped</h2><p>${esc(state.abortReason ?? "")}</p>`;
  }
}

export function mount(root: HTMLElement, url: string, token: string): void {
  let state = initialState();
  const socket = new WebSocket(url);

  function render(): void {
    root.innerHTML = screenHtml(state) + recordSheetHtml(state);
    const submit = root.querySelector<HTMLButtonElement>("#submit");
    if (submit) {
      const priv = root.querySelector<HTMLInputElement>("#private")!;
      const grp = root.querySelector<HTMLInputElement>("#group")!;
      const error = root.querySelector<HTMLElement>("#entry-error")!;
      const recheck = () => {
        const check = validateAllocation(priv.value, grp.value, state.endowment);
        submit.disabled = !check.ok;
        error.textContent = check.ok ? "" : check.message;
      };
      priv.addEventListener("input", recheck);
      grp.addEventListener("input", recheck);
      submit.addEventListener("click", () => {
        const check = validateAllocation(priv.value, grp.value, state.endowment);
        if (!check.ok) return;
        socket.send(encodeSubmit(check.privateTokens, check.groupTokens));
        state = allocationSubmitted(state);
        render();
      });
    }
    const ack = root.querySelector<HTMLButtonElement>("#ack");
    if (ack) {
      ack.addEventListener("click", () => {
        socket.send(encodeAck());
        state = { ...state, phase: "waiting_for_others" };
        render();
      });
    }
  }

  socket.addEventListener("open", () => socket.send(encodeJoin(token)));
  socket.addEventListener("message", (event) => {
    try {
      state = applyServerMessage(state, decodeServerFrame(String(event.data)));
    } catch (exc) {
      if (exc instanceof ProtocolError) {
        root.innerHTML = `<h2>Protocol error</h2><p>${esc(exc.message)}</p>`;
        return;
      }
      throw exc;
    }
    render();
  });
  socket.addEventListener("close", () => {
    if (state.phase !== "finished" && state.phase !== "aborted") {
      root.innerHTML =
        "<h2>Connection lost</h2><p>Reload this page to rejoin with the same link.</p>";
    }
  });

  render();
}

// auto-mount in a browser; tests import the pure modules directly
if (typeof document !== "undefined" && document.getElementById("app")) {
  const params = new URLSearchParams(window.location.search);
  const server = params.get("server") ?? `ws://${window.location.host}/ws`;
  const token = params.get("token") ?? "";
  mount(document.getElementById("app")!, server, token);
}
