import type { FetchLike } from "./client.js";
import type { ApiEvent } from "./types.js";

export interface SseFrame {
  id: number | null;
  event: string;
  data: string;
}

/** Incremental parser for a text/event-stream body.
 *
 * Frames are separated by a blank line; a frame may arrive split across an
 * arbitrary number of chunks, so the tail is buffered until its terminator
 * shows up.
 */
export class SseParser {
  private buffer = "";

  push(chunk: string): SseFrame[] {
    this.buffer += chunk;
    const pieces = this.buffer.split(/\r?\n\r?\n/);
    this.buffer = pieces.pop() ?? "";
    const frames: SseFrame[] = [];
    for (const piece of pieces) {
      const frame = parseFrame(piece);
      if (frame) frames.push(frame);
    }
    return frames;
  }
}

function parseFrame(block: string): SseFrame | null {
  let id: number | null = null;
  let event = "message";
  const dataLines: string[] = [];
  for (const line of block.split(/\r?\n/)) {
    if (line.startsWith("id:")) {
      const n = Number(line.slice(3).trim());
      if (Number.isFinite(n)) id = n;
    } else if (line.startsWith("event:")) {
      event = line.slice(6).trim();
    } else if (line.startsWith("data:")) {
      dataLines.push(line.slice(5).trim());
    }
  }
  if (dataLines.length === 0) return null;
  return { id, event, data: dataLines.join("\n") };
}

export interface SubscribeOptions {
  baseUrl: string;
  sessionId: string;
  onEvent: (event: ApiEvent) => void;
  /** Resume after this sequence number (exclusive). */
  after?: number;
  fetchImpl?: FetchLike;
  /** Reconnect budget for dropped (non-terminal) streams. */
  maxReconnects?: number;
}

/** Consume a session's event stream until its Terminal event.
 *
 * If the connection drops early, reconnects with a Last-Event-ID header so
 * the server replays from the last sequence seen — events are therefore
 * delivered to `onEvent` exactly once and in sequence order.
 */
export async function subscribeEvents(options: SubscribeOptions): Promise<void> {
  const fetchImpl: FetchLike =
    options.fetchImpl ?? ((url, init) => fetch(url, init));
  let lastId = options.after ?? 0;
  let reconnectsLeft = options.maxReconnects ?? 20;

  while (true) {
    const url =
      `${options.baseUrl}/sessions/${encodeURIComponent(options.sessionId)}` +
      `/events?after=${lastId}`;
    const init: RequestInit = {};
    if (lastId > 0) init.headers = { "last-event-id": String(lastId) };
    const response = await fetchImpl(url, init);
    if (!response.ok || !response.body) {
      throw new Error(`event stream failed: HTTP ${response.status}`);
    }

    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    const parser = new SseParser();
    let sawTerminal = false;
    while (true) {
      const { value, done } = await reader.read();
      if (done) break;
      for (const frame of parser.push(decoder.decode(value, { stream: true }))) {
        const event = JSON.parse(frame.data) as ApiEvent;
        lastId = frame.id ?? event.sequence;
        options.onEvent(event);
        if (event.kind === "Terminal") sawTerminal = true;
      }
    }
    if (sawTerminal) return;
    if (reconnectsLeft-- <= 0) {
      throw new Error("event stream ended without a Terminal event");
    }
  }
}
