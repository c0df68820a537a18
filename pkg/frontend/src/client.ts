import type {
  Mode,
  SkipReason,
  Snapshot,
  TaskDetail,
  TaskSummary,
} from "./types.js";

/** Narrow view of fetch so tests can substitute a recording stub. */
export type FetchLike = (
  url: string,
  init?: RequestInit,
) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

function detailFrom(bodyText: string): string {
  try {
    const parsed = JSON.parse(bodyText);
    if (parsed && typeof parsed.detail === "string") return parsed.detail;
  } catch {
    // non-JSON error body; fall through to the raw text
  }
  return bodyText;
}

/** Thin JSON client over the session service.  One method call = exactly one
 * HTTP request; no retries, no caching — the truth lives on the server. */
export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(this.baseUrl + path, init);
    const text = await response.text();
    if (!response.ok) {
      throw new ApiError(response.status, detailFrom(text));
    }
    return JSON.parse(text) as T;
  }

  listTasks(): Promise<TaskSummary[]> {
    return this.request("GET", "/tasks");
  }

  getTask(taskId: string): Promise<TaskDetail> {
    return this.request("GET", `/tasks/${encodeURIComponent(taskId)}`);
  }

  createSession(taskId: string, mode: Mode): Promise<Snapshot> {
    return this.request("POST", "/sessions", { task_id: taskId, mode });
  }

  getSession(sessionId: string): Promise<Snapshot> {
    return this.request("GET", `/sessions/${encodeURIComponent(sessionId)}`);
  }

  postFeedback(sessionId: string, text: string): Promise<Snapshot> {
    return this.request(
      "POST",
      `/sessions/${encodeURIComponent(sessionId)}/feedback`,
      { text },
    );
  }

  postComplete(sessionId: string): Promise<Snapshot> {
    return this.request(
      "POST",
      `/sessions/${encodeURIComponent(sessionId)}/complete`,
    );
  }

  postSkip(sessionId: string, reason: SkipReason): Promise<Snapshot> {
    return this.request(
      "POST",
      `/sessions/${encodeURIComponent(sessionId)}/skip`,
      { reason },
    );
  }
}
