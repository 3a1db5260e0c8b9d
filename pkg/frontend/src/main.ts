// Console wiring: one session, one in-flight turn, REST polling for the
// transcript pane (the API is plain request/response, no push channel).

import { ApiError, FlowkitApi, type TurnRecord } from "./api.js";
import { renderChat, renderInspection, renderMetrics, renderStatus } from "./render.js";
import {
  beginSend,
  buildInspection,
  buildMetricsView,
  initialChatState,
  selectTurn,
  sendFailed,
  sendSucceeded,
  sessionStarted,
  syncFromTranscript,
  type ChatViewState,
} from "./state.js";

const POLL_MS = 2500;

const api = new FlowkitApi("");
let state: ChatViewState = initialChatState();
let records: TurnRecord[] = [];

const $ = (id: string) => document.getElementById(id) as HTMLElement;
const input = () => $("chat-input") as HTMLInputElement;

function redraw(): void {
  renderChat($("messages"), state, (turnIndex) => {
    state = selectTurn(state, turnIndex);
    redraw();
  });
  renderStatus($("status"), state);
  const record = records.find((r) => r.turn_index === state.selectedTurn) ?? null;
  renderInspection($("inspector"), record ? buildInspection(record) : null);
  ($("send") as HTMLButtonElement).disabled = state.pending || state.ended;
}

async function refreshTranscript(): Promise<void> {
  if (!state.sessionId) return;
  try {
    const transcript = await api.getTranscript(state.sessionId);
    records = transcript.records;
    if (!state.pending) {
      state = syncFromTranscript(state, records);
    }
    redraw();
  } catch {
    // transient; next poll retries
  }
}

async function startSession(): Promise<void> {
  const apps = await api.listApplications();
  const first = apps.applications[0];
  if (!first) {
    $("status").textContent = "No applications are loaded on the server.";
    return;
  }
  const created = await api.createSession({
    appId: first.appId,
    client: "console",
    userId: "console-user",
  });
  state = sessionStarted(state, created.sessionId, created.responses, created.ended);
  await refreshTranscript();
}

async function send(): Promise<void> {
  const text = input().value;
  const next = beginSend(state, text);
  if (next === null) return; // pending turn or ended session: blocked
  state = next;
  input().value = "";
  redraw();
  try {
    const reply = await api.postTurn(state.sessionId!, text);
    state = sendSucceeded(state, reply);
  } catch (err) {
    if (err instanceof ApiError) {
      state = sendFailed(state, err.status, err.message);
      if (err.status === 409) input().value = text; // offer the retry
    } else {
      state = sendFailed(state, 0, String(err));
    }
  }
  await refreshTranscript();
}

async function loadMetrics(): Promise<void> {
  const metric = ($("metric") as HTMLSelectElement).value as "sessions" | "turns" | "ood_rate";
  const groupBy = ($("group-by") as HTMLSelectElement).value as "client" | "application" | "none";
  const granularity = ($("granularity") as HTMLSelectElement).value as "hour" | "day" | "week";
  const series = await api.getMetrics({ metric, groupBy, granularity });
  renderMetrics($("metrics"), buildMetricsView(series.buckets));
}

function wire(): void {
  $("send").addEventListener("click", () => void send());
  input().addEventListener("keydown", (event) => {
    if ((event as KeyboardEvent).key === "Enter") void send();
  });
  for (const id of ["metric", "group-by", "granularity"]) {
    $(id).addEventListener("change", () => void loadMetrics()); // toggle refetches
  }
  $("metrics-refresh").addEventListener("click", () => void loadMetrics());
  void startSession().then(() => void loadMetrics());
  setInterval(() => void refreshTranscript(), POLL_MS);
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
  wire();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", wire);
}
