// Pure view-state for the console. No business logic lives here: every
// displayed string is a verbatim copy of an API field (numbers go through
// String() only). Rendering and fetching happen elsewhere.
export function initialChatState() {
    return {
        sessionId: null,
        messages: [],
        pending: false,
        ended: false,
        selectedTurn: null,
        retryPrompt: null,
    };
}
export function sessionStarted(state, sessionId, responses, ended) {
    return {
        ...initialChatState(),
        sessionId,
        ended,
        messages: responses.map((text) => ({ speaker: "bot", text, turnIndex: 0 })),
    };
}
/** Returns null when a send must be blocked (pending turn or ended session). */
export function beginSend(state, text) {
    if (state.pending || state.ended || state.sessionId === null) {
        return null;
    }
    return {
        ...state,
        pending: true,
        retryPrompt: null,
        messages: [
            ...state.messages,
            { speaker: "user", text, turnIndex: nextTurnIndex(state) },
        ],
    };
}
export function sendSucceeded(state, reply) {
    const turnIndex = lastTurnIndex(state);
    return {
        ...state,
        pending: false,
        ended: reply.ended,
        messages: [
            ...state.messages,
            ...reply.responses.map((text) => ({ speaker: "bot", text, turnIndex })),
        ],
    };
}
/** A 409 means another turn is in flight: keep the session usable and ask
 * the user to retry; other failures surface their message the same way. */
export function sendFailed(state, status, message) {
    return {
        ...state,
        pending: false,
        messages: state.messages.slice(0, -1), // drop the optimistic user bubble
        retryPrompt: status === 409 ? "A turn is still processing - please retry." : message,
    };
}
function nextTurnIndex(state) {
    return lastTurnIndex(state) + 1;
}
function lastTurnIndex(state) {
    const last = state.messages[state.messages.length - 1];
    return last ? last.turnIndex : 0;
}
/** Rebuild the message list from the server transcript; the server order is
 * the truth the view must match. */
export function syncFromTranscript(state, records) {
    const messages = [];
    for (const record of records) {
        if (record.turn_index > 0) {
            // Turn 0 is the session opening; it has no user utterance. A silence
            // turn shows as an empty user bubble, mirroring the stored record.
            messages.push({ speaker: "user", text: record.raw_utterance, turnIndex: record.turn_index });
        }
        for (const text of record.responses) {
            messages.push({ speaker: "bot", text, turnIndex: record.turn_index });
        }
    }
    return { ...state, messages };
}
export function selectTurn(state, turnIndex) {
    return { ...state, selectedTurn: turnIndex };
}
/** Verbatim pass-through of TurnRecord fields into display strings.
 * Numbers are String()-ed, nothing is recomputed or rounded. */
export function buildInspection(record) {
    const routing = record.routing;
    return {
        turnIndex: String(record.turn_index),
        rawUtterance: record.raw_utterance,
        maskedUtterance: record.masked_utterance,
        scope: routing ? routing.scope : "",
        bestLocalSim: routing ? String(routing.best_local_sim) : "",
        bestGlobalSim: routing ? String(routing.best_global_sim) : "",
        chosenIntent: routing && routing.chosen_intent ? routing.chosen_intent.join("/") : "",
        confidence: routing && routing.confidence !== null ? String(routing.confidence) : "",
        nodePath: [...record.traversed_nodes],
        entities: record.entities.map((e) => `${e.type_name} "${e.surface}" [${e.start}:${e.end}]`),
        skimmerWrites: record.skimmer_writes.map((w) => `${w.attribute} = ${JSON.stringify(w.value)}`),
        responses: [...record.responses],
        nrg: record.nrg_used ? `${record.nrg_used.act}${record.nrg_used.fallback ? " (fallback)" : ""}` : "",
        error: record.error ?? "",
        durationMs: String(record.duration_ms),
    };
}
export function buildMetricsView(buckets) {
    if (buckets.length === 0) {
        return { bars: [], maxValue: 0, emptyMessage: "No data for this query yet." };
    }
    const bars = buckets.map((bucket) => ({
        label: `${bucket.bucketStart} ${bucket.groupKey}`,
        groupKey: bucket.groupKey,
        value: bucket.value,
        valueText: String(bucket.value),
    }));
    return { bars, maxValue: Math.max(...bars.map((b) => b.value)), emptyMessage: null };
}
