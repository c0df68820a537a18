import { ApiClient, ApiError } from "./client.js";
import type { FetchLike } from "./client.js";
import type { Region } from "./render.js";
import { renderSession } from "./render.js";
import { subscribeEvents } from "./sse.js";
import type {
  ApiEvent,
  Mode,
  SkipReason,
  Snapshot,
  TaskDetail,
  Turn,
} from "./types.js";

/** Client-side driver for one open session view.
 *
 * Holds a copy of the server snapshot and two bits of transient UI state
 * (pending flag, inline notice).  Every user action maps to exactly one API
 * call; the response snapshot replaces the local copy wholesale, and streamed
 * events only ever *add* to it — so discarding this object and rebuilding it
 * from a fresh GET yields an identical view.
 */
export class SessionController {
  private pending = false;
  private notice: string | null = null;
  private inFlight = false;
  private lastSequence = 0;
  private ahead = new Map<number, ApiEvent>();
  private subscription: Promise<void> | null = null;

  constructor(
    private readonly client: ApiClient,
    private snapshot: Snapshot,
    private readonly task: TaskDetail | null,
    private readonly now: () => number = Date.now,
  ) {}

  static async open(
    client: ApiClient,
    taskId: string,
    mode: Mode,
    now?: () => number,
  ): Promise<SessionController> {
    const task = await client.getTask(taskId);
    const snapshot = await client.createSession(taskId, mode);
    return new SessionController(client, snapshot, task, now);
  }

  /** Rebuild a view for an already-running session (page reload). */
  static async resume(
    client: ApiClient,
    sessionId: string,
    now?: () => number,
  ): Promise<SessionController> {
    const snapshot = await client.getSession(sessionId);
    const task = await client.getTask(snapshot.task_id);
    return new SessionController(client, snapshot, task, now);
  }

  get sessionId(): string {
    return this.snapshot.session_id;
  }

  currentSnapshot(): Snapshot {
    return this.snapshot;
  }

  render(): Region[] {
    return renderSession(this.snapshot, this.task, this.now(), {
      pending: this.pending,
      notice: this.notice,
    });
  }

  /** Returns false (and makes no API call) when blocked client-side. */
  async submitFeedback(text: string): Promise<boolean> {
    if (text.trim() === "") {
      this.notice = "Feedback cannot be empty.";
      return false;
    }
    return this.action(() =>
      this.client.postFeedback(this.snapshot.session_id, text),
    );
  }

  async complete(): Promise<boolean> {
    return this.action(() =>
      this.client.postComplete(this.snapshot.session_id),
    );
  }

  async skip(reason: SkipReason): Promise<boolean> {
    return this.action(() =>
      this.client.postSkip(this.snapshot.session_id, reason),
    );
  }

  /** One API call per action; re-entry while a call is in flight is dropped,
   * which is what debounces a double-clicked Complete button. */
  private async action(call: () => Promise<Snapshot>): Promise<boolean> {
    if (this.inFlight) return false;
    this.inFlight = true;
    this.notice = null;
    try {
      this.snapshot = await call();
      this.pending = this.snapshot.outcome === null;
      return true;
    } catch (err) {
      if (err instanceof ApiError) {
        this.notice = err.detail;
        return false;
      }
      throw err;
    } finally {
      this.inFlight = false;
    }
  }

  /** Apply one streamed event.  Events are applied in sequence order only:
   * stale sequences are dropped, gaps are parked until the missing event
   * arrives. */
  applyEvent(event: ApiEvent): void {
    if (event.sequence <= this.lastSequence) return;
    if (event.sequence > this.lastSequence + 1) {
      this.ahead.set(event.sequence, event);
      return;
    }
    this.applyNow(event);
    this.lastSequence = event.sequence;
    let next = this.ahead.get(this.lastSequence + 1);
    while (next !== undefined) {
      this.ahead.delete(next.sequence);
      this.applyNow(next);
      this.lastSequence = next.sequence;
      next = this.ahead.get(this.lastSequence + 1);
    }
  }

  private applyNow(event: ApiEvent): void {
    this.pending = false;
    switch (event.kind) {
      case "TurnReady": {
        const turn = event.payload as unknown as Turn;
        // Append-only: a known turn may since have had user feedback
        // attached, which the earlier TurnReady payload predates.
        if (turn.index >= this.snapshot.turns.length) {
          this.snapshot.turns.push(turn);
          this.snapshot.last_error = null;
        }
        break;
      }
      case "AwaitingFeedback":
        if (this.snapshot.outcome === null) {
          this.snapshot.state = "AwaitingFeedback";
        }
        break;
      case "Error":
        this.snapshot.last_error = String(event.payload.message ?? "error");
        break;
      case "Terminal":
        this.snapshot.state = String(event.payload.state);
        this.snapshot.outcome = event.payload
          .outcome as Snapshot["outcome"];
        break;
    }
  }

  /** Single event-stream subscription per view; extra calls return the
   * existing one. */
  subscribe(fetchImpl?: FetchLike, onApplied?: () => void): Promise<void> {
    if (this.subscription === null) {
      this.subscription = subscribeEvents({
        baseUrl: this.client.baseUrl,
        sessionId: this.snapshot.session_id,
        fetchImpl,
        onEvent: (event) => {
          this.applyEvent(event);
          onApplied?.();
        },
      });
    }
    return this.subscription;
  }
}
