// Typed client for the labeling service. Every call the UI makes goes
// through request() and lands in the log, so tests can check that nothing
// outside the documented endpoint set is ever used.

export interface SessionDescriptor {
  session_id: string;
  dataset: string;
  created_at: string;
  updated_at: string;
  n: number;
  d: number | null;
  n_classes: number;
  acquisition: string;
  step: number;
  labeled_count: number;
  pool_remaining: number;
  pending: number | null;
  truth_registered: boolean;
}

export interface QueryPayload {
  session_id: string;
  node: number;
  acquisition_value: number;
  prediction: number;
  confidence: number;
  step: number;
  labeled_count: number;
  pool_remaining: number;
  display?: number[];
}

export interface LabelResponse {
  session_id: string;
  step: number;
  node: number;
  label: number;
  labeled_count: number;
  pool_remaining: number;
  next_query: QueryPayload | null;
}

export interface HistoryRow {
  step: number;
  node: number;
  label: number;
  source: string;
}

export interface AccuracyPoint {
  step: number;
  labeled_count: number;
  accuracy: number;
}

export interface PredictionRow {
  node: number;
  prediction: number;
  confidence: number;
}

export interface CreateSessionBody {
  dataset?: string;
  features_path?: string;
  graph_path?: string;
  truth_path?: string;
  display_path?: string;
  n_classes?: number;
  acquisition?: string;
  seed_labels?: [number, number][];
  seed_per_class?: number;
  gamma?: number;
  m?: number;
  k?: number;
  metric?: string;
  seed?: number;
}

export interface RequestLogEntry {
  method: string;
  path: string;
  status: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly errorCode: string,
    message: string,
  ) {
    super(message);
  }
}

export class ApiClient {
  readonly base: string;
  readonly log: RequestLogEntry[] = [];

  constructor(base: string) {
    this.base = base.replace(/\/+$/, "");
  }

  private async request(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<any> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    let response: Response;
    try {
      response = await fetch(this.base + path, init);
    } catch (err) {
      this.log.push({ method, path, status: 0 });
      throw new ApiError(0, "unreachable", "labeling service is unreachable");
    }
    this.log.push({ method, path, status: response.status });
    const payload = await response.json().catch(() => ({}));
    if (!response.ok) {
      throw new ApiError(
        response.status,
        payload.error_code ?? "unknown",
        payload.message ?? response.statusText,
      );
    }
    return payload;
  }

  listSessions(): Promise<{ sessions: SessionDescriptor[] }> {
    return this.request("GET", "/sessions");
  }

  createSession(body: CreateSessionBody): Promise<SessionDescriptor> {
    return this.request("POST", "/sessions", body);
  }

  getSession(id: string): Promise<SessionDescriptor> {
    return this.request("GET", `/sessions/${id}`);
  }

  getQuery(id: string): Promise<QueryPayload> {
    return this.request("GET", `/sessions/${id}/query`);
  }

  postLabel(
    id: string,
    node: number,
    label: number,
    override = false,
  ): Promise<LabelResponse> {
    return this.request("POST", `/sessions/${id}/labels`, {
      node,
      label,
      override,
    });
  }

  getPredictions(
    id: string,
    nodes?: number[],
  ): Promise<{ predictions: PredictionRow[] }> {
    const suffix = nodes && nodes.length ? `?nodes=${nodes.join(",")}` : "";
    return this.request("GET", `/sessions/${id}/predictions${suffix}`);
  }

  getHistory(id: string): Promise<{ history: HistoryRow[] }> {
    return this.request("GET", `/sessions/${id}/history`);
  }

  getAccuracy(id: string): Promise<{ accuracy: AccuracyPoint[] }> {
    return this.request("GET", `/sessions/${id}/accuracy`);
  }
}
