import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/client.js";
import { guidedOpen } from "./fixtures.js";

interface Recorded {
  url: string;
  method: string;
  body: unknown;
}

/** Records every request and replies from a FIFO script. */
function recordingFetch(replies: Array<{ status?: number; body: unknown }>) {
  const calls: Recorded[] = [];
  const impl = async (url: string, init?: RequestInit): Promise<Response> => {
    calls.push({
      url,
      method: init?.method ?? "GET",
      body: init?.body ? JSON.parse(String(init.body)) : undefined,
    });
    const reply = replies.shift() ?? { body: {} };
    return new Response(JSON.stringify(reply.body), {
      status: reply.status ?? 200,
      headers: { "content-type": "application/json" },
    });
  };
  return { calls, impl };
}

const BASE = "http://stub";

describe("ApiClient request shapes", () => {
  it("createSession posts task_id and mode in one call", async () => {
    const { calls, impl } = recordingFetch([{ status: 201, body: guidedOpen() }]);
    const client = new ApiClient(BASE, impl);
    const snap = await client.createSession("sql-001", "guided");
    expect(calls).toHaveLength(1);
    expect(calls[0]).toEqual({
      url: `${BASE}/sessions`,
      method: "POST",
      body: { task_id: "sql-001", mode: "guided" },
    });
    expect(snap.session_id).toBe(guidedOpen().session_id);
  });

  it("feedback posts the text body to the session path", async () => {
    const { calls, impl } = recordingFetch([{ body: guidedOpen() }]);
    await new ApiClient(BASE, impl).postFeedback("sess-1", "wrong column");
    expect(calls[0].url).toBe(`${BASE}/sessions/sess-1/feedback`);
    expect(calls[0].body).toEqual({ text: "wrong column" });
  });

  it("complete posts with no body", async () => {
    const { calls, impl } = recordingFetch([{ body: guidedOpen() }]);
    await new ApiClient(BASE, impl).postComplete("sess-1");
    expect(calls[0].method).toBe("POST");
    expect(calls[0].body).toBeUndefined();
  });

  it.each(["unclear", "unsolvable"] as const)(
    "skip carries the %s reason enum",
    async (reason) => {
      const { calls, impl } = recordingFetch([{ body: guidedOpen() }]);
      await new ApiClient(BASE, impl).postSkip("sess-1", reason);
      expect(calls[0].url).toBe(`${BASE}/sessions/sess-1/skip`);
      expect(calls[0].body).toEqual({ reason });
    },
  );

  it("reads tasks and sessions with GET", async () => {
    const { calls, impl } = recordingFetch([
      { body: [] },
      { body: {} },
      { body: guidedOpen() },
    ]);
    const client = new ApiClient(BASE, impl);
    await client.listTasks();
    await client.getTask("sql-001");
    await client.getSession("sess-1");
    expect(calls.map((c) => [c.method, c.url])).toEqual([
      ["GET", `${BASE}/tasks`],
      ["GET", `${BASE}/tasks/sql-001`],
      ["GET", `${BASE}/sessions/sess-1`],
    ]);
  });

  it("URL-encodes path parameters", async () => {
    const { calls, impl } = recordingFetch([{ body: {} }]);
    await new ApiClient(BASE, impl).getTask("weird/task id");
    expect(calls[0].url).toBe(`${BASE}/tasks/weird%2Ftask%20id`);
  });
});

describe("ApiClient error mapping", () => {
  it("non-2xx raises ApiError with the service's detail string", async () => {
    const { impl } = recordingFetch([
      { status: 409, body: { detail: "session already terminal" } },
    ]);
    const err = await new ApiClient(BASE, impl)
      .postComplete("sess-1")
      .catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(409);
    expect(err.detail).toBe("session already terminal");
  });

  it("falls back to the raw body when the error is not JSON", async () => {
    const impl = async () => new Response("boom", { status: 500 });
    const err = await new ApiClient(BASE, impl)
      .listTasks()
      .catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.detail).toBe("boom");
  });
});
