// End-to-end console fidelity: run the golden conversation against a real
// server, then check that everything the inspection panel would display
// string-equals the TurnRecord fields fetched from the API, and that the
// chat pane's message order reproduces the golden transcript.
import assert from "node:assert/strict";
import { spawn } from "node:child_process";
import { once } from "node:events";
import { readFileSync } from "node:fs";
import path from "node:path";
import { after, before, test } from "node:test";
import { fileURLToPath } from "node:url";
import { FlowkitApi } from "../src/api.js";
import { buildInspection, initialChatState, sessionStarted, syncFromTranscript } from "../src/state.js";
const HERE = path.dirname(fileURLToPath(import.meta.url));
const REPO = path.resolve(HERE, "..", "..", "..");
const BUDDY = JSON.parse(readFileSync(path.join(REPO, "tests", "data", "buddy.json"), "utf-8"));
const GOLDEN = readFileSync(path.join(REPO, "tests", "data", "golden_transcript.txt"), "utf-8");
const TURNS = GOLDEN.split("\n")
    .filter((line) => line.startsWith("you: "))
    .map((line) => line.slice("you: ".length));
let server;
let baseUrl = "";
before(async () => {
    server = spawn("python3", ["-m", "flowkit.cli", "serve", "--port", "0"], {
        cwd: REPO,
        stdio: ["ignore", "pipe", "inherit"],
    });
    const port = await new Promise((resolve, reject) => {
        const timer = setTimeout(() => reject(new Error("server did not start")), 30000);
        server.stdout.on("data", (chunk) => {
            const match = /http:\/\/127\.0\.0\.1:(\d+)/.exec(chunk.toString());
            if (match) {
                clearTimeout(timer);
                resolve(match[1]);
            }
        });
        server.on("exit", (code) => reject(new Error(`server exited early (${code})`)));
    });
    baseUrl = `http://127.0.0.1:${port}`;
});
after(async () => {
    server.kill("SIGINT");
    await once(server, "exit").catch(() => undefined);
});
test("golden replay: panel values string-equal API fields; chat order matches", async () => {
    const api = new FlowkitApi(baseUrl);
    const { appId } = await api.uploadApplication(BUDDY);
    const created = await api.createSession({ appId, userId: "ada", client: "console", seed: 42 });
    let state = sessionStarted(initialChatState(), created.sessionId, created.responses, created.ended);
    for (const utterance of TURNS) {
        const reply = await api.postTurn(created.sessionId, utterance);
        if (reply.ended)
            break;
    }
    const transcript = await api.getTranscript(created.sessionId);
    assert.equal(transcript.records.length, TURNS.length + 1);
    // Every displayed value equals the fetched field, stringified verbatim.
    for (const record of transcript.records) {
        const panel = buildInspection(record);
        assert.equal(panel.rawUtterance, record.raw_utterance);
        assert.equal(panel.maskedUtterance, record.masked_utterance);
        assert.deepEqual(panel.nodePath, record.traversed_nodes);
        assert.deepEqual(panel.responses, record.responses);
        if (record.routing) {
            assert.equal(panel.scope, record.routing.scope);
            assert.equal(panel.bestLocalSim, String(record.routing.best_local_sim));
            assert.equal(panel.bestGlobalSim, String(record.routing.best_global_sim));
        }
        else {
            assert.equal(panel.scope, "");
        }
    }
    // Spot-check the annotated turns of the golden conversation.
    const matrixTurn = transcript.records.find((r) => r.raw_utterance === "My favorite movie is Matrix");
    assert.equal(matrixTurn.masked_utterance, "My favorite movie is {movie}");
    assert.equal(buildInspection(matrixTurn).scope, "Local");
    const oodTurn = transcript.records.find((r) => r.raw_utterance === "blargh kwyjibo zzz");
    assert.equal(buildInspection(oodTurn).scope, "OutOfDomain");
    // The chat pane mirrors the server transcript in order: rebuilding the
    // golden text from the synced view state must reproduce it byte for byte.
    state = syncFromTranscript(state, transcript.records);
    const rendered = state.messages
        .map((m) => `${m.speaker === "user" ? "you" : "bot"}: ${m.text}`)
        .join("\n") + "\n";
    assert.equal(rendered, GOLDEN);
});
