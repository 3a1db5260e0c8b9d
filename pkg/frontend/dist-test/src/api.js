// Typed client for the flowkit HTTP API. Field names mirror the wire format
// exactly; the console never recomputes anything it can fetch.
export class ApiError extends Error {
    status;
    constructor(status, message) {
        super(message);
        this.status = status;
    }
}
export class FlowkitApi {
    baseUrl;
    fetchImpl;
    constructor(baseUrl = "", fetchImpl = (input, init) => fetch(input, init)) {
        this.baseUrl = baseUrl;
        this.fetchImpl = fetchImpl;
    }
    async request(method, path, body) {
        const response = await this.fetchImpl(this.baseUrl + path, {
            method,
            headers: body !== undefined ? { "Content-Type": "application/json" } : undefined,
            body: body !== undefined ? JSON.stringify(body) : undefined,
        });
        const payload = await response.json().catch(() => ({}));
        if (!response.ok) {
            const detail = payload.error ?? response.statusText;
            throw new ApiError(response.status, detail);
        }
        return payload;
    }
    uploadApplication(bundle) {
        return this.request("POST", "/applications", bundle);
    }
    listApplications() {
        return this.request("GET", "/applications");
    }
    createSession(body) {
        return this.request("POST", "/sessions", body);
    }
    postTurn(sessionId, utterance) {
        return this.request("POST", `/sessions/${encodeURIComponent(sessionId)}/turns`, { utterance });
    }
    getTranscript(sessionId) {
        return this.request("GET", `/sessions/${encodeURIComponent(sessionId)}/transcript`);
    }
    getMetrics(query) {
        const params = new URLSearchParams({
            metric: query.metric,
            groupBy: query.groupBy,
            granularity: query.granularity,
        });
        if (query.from)
            params.set("from", query.from);
        if (query.to)
            params.set("to", query.to);
        return this.request("GET", `/metrics?${params.toString()}`);
    }
    getAttributes(scope, key) {
        const params = new URLSearchParams({ scope, key });
        return this.request("GET", `/attributes?${params.toString()}`);
    }
}
