import { describe, expect, it } from "vitest";

import { SseParser, subscribeEvents } from "../src/sse.js";
import type { ApiEvent } from "../src/types.js";
import { guidedEvents, sseFrame } from "./fixtures.js";

function sseResponse(...chunks: string[]): Response {
  const encoder = new TextEncoder();
  const stream = new ReadableStream<Uint8Array>({
    start(controller) {
      for (const chunk of chunks) controller.enqueue(encoder.encode(chunk));
      controller.close();
    },
  });
  return new Response(stream, {
    status: 200,
    headers: { "content-type": "text/event-stream" },
  });
}

describe("SseParser", () => {
  it("yields frames with id, event and data", () => {
    const parser = new SseParser();
    const frames = parser.push(`id: 7\nevent: TurnReady\ndata: {"a":1}\n\n`);
    expect(frames).toEqual([
      { id: 7, event: "TurnReady", data: `{"a":1}` },
    ]);
  });

  it("reassembles frames split across arbitrary chunk boundaries", () => {
    const text = guidedEvents().map(sseFrame).join("");
    for (const size of [1, 3, 17, 100]) {
      const parser = new SseParser();
      const frames = [];
      for (let i = 0; i < text.length; i += size) {
        frames.push(...parser.push(text.slice(i, i + size)));
      }
      expect(frames.map((f) => f.id)).toEqual([1, 2, 3, 4, 5]);
      expect(frames.map((f) => f.event)[4]).toBe("Terminal");
    }
  });

  it("ignores keep-alive frames with no data", () => {
    const parser = new SseParser();
    expect(parser.push(": ping\n\n")).toEqual([]);
  });
});

describe("subscribeEvents", () => {
  it("delivers the whole stream in order and stops at Terminal", async () => {
    const requested: string[] = [];
    const text = guidedEvents().map(sseFrame).join("");
    const seen: ApiEvent[] = [];
    await subscribeEvents({
      baseUrl: "http://stub",
      sessionId: "sess-0001",
      onEvent: (e) => seen.push(e),
      fetchImpl: async (url) => {
        requested.push(url);
        return sseResponse(text);
      },
    });
    expect(seen.map((e) => e.sequence)).toEqual([1, 2, 3, 4, 5]);
    expect(seen[4].kind).toBe("Terminal");
    expect(requested).toEqual([
      "http://stub/sessions/sess-0001/events?after=0",
    ]);
  });

  it("resumes from the last sequence when the stream drops early", async () => {
    const events = guidedEvents();
    const requests: Array<{ url: string; lastEventId: string | undefined }> = [];
    const bodies = [
      events.slice(0, 2).map(sseFrame).join(""), // drops before Terminal
      events.slice(2).map(sseFrame).join(""),
    ];
    const seen: number[] = [];
    await subscribeEvents({
      baseUrl: "http://stub",
      sessionId: "sess-0001",
      onEvent: (e) => seen.push(e.sequence),
      fetchImpl: async (url, init) => {
        const headers = (init?.headers ?? {}) as Record<string, string>;
        requests.push({ url, lastEventId: headers["last-event-id"] });
        return sseResponse(bodies.shift() ?? "");
      },
    });
    expect(seen).toEqual([1, 2, 3, 4, 5]);
    expect(requests[0].url).toContain("after=0");
    expect(requests[1].url).toContain("after=2");
    expect(requests[1].lastEventId).toBe("2");
  });

  it("gives up when the reconnect budget is spent", async () => {
    await expect(
      subscribeEvents({
        baseUrl: "http://stub",
        sessionId: "sess-0001",
        onEvent: () => {},
        maxReconnects: 2,
        fetchImpl: async () => sseResponse(""),
      }),
    ).rejects.toThrow(/without a Terminal/);
  });

  it("raises on an HTTP error from the stream endpoint", async () => {
    await expect(
      subscribeEvents({
        baseUrl: "http://stub",
        sessionId: "nope",
        onEvent: () => {},
        fetchImpl: async () =>
          new Response(JSON.stringify({ detail: "no such session" }), {
            status: 404,
          }),
      }),
    ).rejects.toThrow(/404/);
  });
});
