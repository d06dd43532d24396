import { describe, expect, it, vi } from "vitest";

import { ApiError, Client, freshIdempotencyKey } from "../src/api";

function jsonResponse(status: number, body: unknown): Response {
  return {
    ok: status >= 200 && status < 300,
    status,
    json: async () => body,
  } as Response;
}

describe("Client", () => {
  it("creates sessions with a POST to the v1 endpoint", async () => {
    const fetchFn = vi.fn(async () => jsonResponse(201, { id: "abc" }));
    const client = new Client("http://svc", fetchFn);
    await client.createSession({ scenario: "firefight", seed: 7 });
    expect(fetchFn).toHaveBeenCalledWith("http://svc/api/v1/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ scenario: "firefight", seed: 7 }),
    });
  });

  it("sends the idempotency key and expected index on actions", async () => {
    const fetchFn = vi.fn(async () => jsonResponse(200, { index: 0 }));
    const client = new Client("", fetchFn);
    await client.applyAction("sid", "ContainFire", "key-1", 0);
    const [url, init] = fetchFn.mock.calls[0] as [string, RequestInit];
    expect(url).toBe("/api/v1/sessions/sid/actions");
    expect(JSON.parse(init.body as string)).toEqual({
      action: "ContainFire",
      idempotency_key: "key-1",
      expected_index: 0,
    });
  });

  it("encodes report weights as a query parameter", async () => {
    const fetchFn = vi.fn(async () => jsonResponse(200, {}));
    const client = new Client("", fetchFn);
    await client.getReport("sid", "1,0");
    expect(fetchFn.mock.calls[0][0]).toBe(
      "/api/v1/sessions/sid/report?weights=1%2C0",
    );
  });

  it("raises ApiError with the structured error body", async () => {
    const fetchFn = vi.fn(async () =>
      jsonResponse(409, {
        code: "session-finished",
        message: "session is finished (failure)",
        details: {},
      }),
    );
    const client = new Client("", fetchFn);
    const error = await client
      .applyAction("sid", "ContainFire", "k")
      .catch((e: unknown) => e);
    expect(error).toBeInstanceOf(ApiError);
    expect((error as ApiError).status).toBe(409);
    expect((error as ApiError).code).toBe("session-finished");
  });
});

describe("freshIdempotencyKey", () => {
  it("produces distinct keys per call", () => {
    const keys = new Set(
      Array.from({ length: 100 }, () => freshIdempotencyKey()),
    );
    expect(keys.size).toBe(100);
  });
});
