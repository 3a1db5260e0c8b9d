// Typed client for the flowkit HTTP API. Field names mirror the wire format
// exactly; the console never recomputes anything it can fetch.

export interface RoutingInfo {
  scope: string;
  best_local_sim: number;
  best_global_sim: number;
  chosen_intent: [string, string] | null;
  confidence: number | null;
}

export interface TurnRecord {
  session_id: string;
  turn_index: number;
  at: string;
  raw_utterance: string;
  entities: Array<{
    start: number;
    end: number;
    surface: string;
    type_name: string;
    normalized: unknown;
  }>;
  masked_utterance: string;
  routing: RoutingInfo | null;
  skimmer_writes: Array<{ attribute: string; value: unknown }>;
  traversed_nodes: string[];
  responses: string[];
  attribute_diff: Array<{ scope: string; name: string; old: unknown; new: unknown }>;
  nrg_used: { act: string; fallback: boolean } | null;
  duration_ms: number;
  error: string | null;
  asr_hypotheses: string[];
}

export interface SessionCreated {
  sessionId: string;
  responses: string[];
  ended: boolean;
}

export interface TurnReply {
  responses: string[];
  ended: boolean;
}

export interface MetricBucket {
  bucketStart: string;
  groupKey: string;
  value: number;
}

export interface MetricsQuery {
  metric: "sessions" | "turns" | "ood_rate";
  groupBy: "client" | "application" | "none";
  granularity: "hour" | "day" | "week";
  from?: string;
  to?: string;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class FlowkitApi {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers: body !== undefined ? { "Content-Type": "application/json" } : undefined,
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    const payload = await response.json().catch(() => ({}));
    if (!response.ok) {
      const detail = (payload as { error?: string }).error ?? response.statusText;
      throw new ApiError(response.status, detail);
    }
    return payload as T;
  }

  uploadApplication(bundle: unknown): Promise<{ appId: string }> {
    return this.request("POST", "/applications", bundle);
  }

  listApplications(): Promise<{ applications: Array<{ appId: string }> }> {
    return this.request("GET", "/applications");
  }

  createSession(body: {
    appId: string;
    userId?: string;
    community?: string;
    client: string;
    seed?: number;
  }): Promise<SessionCreated> {
    return this.request("POST", "/sessions", body);
  }

  postTurn(sessionId: string, utterance: string): Promise<TurnReply> {
    return this.request("POST", `/sessions/${encodeURIComponent(sessionId)}/turns`, { utterance });
  }

  getTranscript(sessionId: string): Promise<{ sessionId: string; records: TurnRecord[] }> {
    return this.request("GET", `/sessions/${encodeURIComponent(sessionId)}/transcript`);
  }

  getMetrics(query: MetricsQuery): Promise<{ buckets: MetricBucket[] }> {
    const params = new URLSearchParams({
      metric: query.metric,
      groupBy: query.groupBy,
      granularity: query.granularity,
    });
    if (query.from) params.set("from", query.from);
    if (query.to) params.set("to", query.to);
    return this.request("GET", `/metrics?${params.toString()}`);
  }

  getAttributes(scope: "user" | "community", key: string): Promise<{
    attributes: Array<{ name: string; value: unknown }>;
  }> {
    const params = new URLSearchParams({ scope, key });
    return this.request("GET", `/attributes?${params.toString()}`);
  }
}
