/** Thin typed client over the service REST API.  All state lives on the
 * server; this module only shuttles JSON. */

import type {
  FrontSummary,
  Report,
  ScenarioInfo,
  SessionView,
  StepResult,
} from "./types";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
    public readonly details: Record<string, unknown> = {},
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export function freshIdempotencyKey(): string {
  if (typeof crypto !== "undefined" && "randomUUID" in crypto) {
    return crypto.randomUUID();
  }
  return `key-${Date.now()}-${Math.random().toString(36).slice(2)}`;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class Client {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, {
      method,
      headers: body === undefined
        ? undefined
        : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json();
    if (!response.ok) {
      const error = payload as {
        code?: string;
        message?: string;
        details?: Record<string, unknown>;
      };
      throw new ApiError(
        response.status,
        error.code ?? "error",
        error.message ?? `request failed with status ${response.status}`,
        error.details ?? {},
      );
    }
    return payload as T;
  }

  listScenarios(): Promise<ScenarioInfo[]> {
    return this.request("GET", "/api/v1/scenarios");
  }

  createSession(options: {
    scenario: string;
    seed?: number;
    gamma?: number;
    horizon?: number;
    reveal?: boolean;
  }): Promise<SessionView> {
    return this.request("POST", "/api/v1/sessions", options);
  }

  getView(sessionId: string): Promise<SessionView> {
    return this.request("GET", `/api/v1/sessions/${sessionId}`);
  }

  applyAction(
    sessionId: string,
    action: string,
    idempotencyKey: string,
    expectedIndex?: number,
  ): Promise<StepResult> {
    return this.request("POST", `/api/v1/sessions/${sessionId}/actions`, {
      action,
      idempotency_key: idempotencyKey,
      ...(expectedIndex === undefined
        ? {}
        : { expected_index: expectedIndex }),
    });
  }

  getReport(sessionId: string, weights?: string): Promise<Report> {
    const query = weights === undefined
      ? ""
      : `?weights=${encodeURIComponent(weights)}`;
    return this.request("GET", `/api/v1/sessions/${sessionId}/report${query}`);
  }

  getFront(
    scenario: string,
    gamma: number,
    horizon: number,
  ): Promise<FrontSummary> {
    return this.request(
      "GET",
      `/api/v1/scenarios/${scenario}/front?gamma=${gamma}&horizon=${horizon}`,
    );
  }
}
