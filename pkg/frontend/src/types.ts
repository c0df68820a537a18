/** Wire types mirroring the session service's JSON payloads.
 *
 * These shapes are pinned by captured fixtures under test/fixtures/, which
 * were recorded from the real service; if the API drifts, the fixture tests
 * are the tripwire.
 */

export type Language = "sql" | "python";
export type Mode = "guided" | "vanilla";
export type SkipReason = "unclear" | "unsolvable";

export interface Verdict {
  success: boolean;
  reason: string;
}

export interface CaseResult {
  index: number;
  passed: boolean;
  detail: string;
}

export interface Execution {
  status: string;
  sql_rows: (string | number | null)[][];
  case_results: CaseResult[];
  stderr_excerpt: string;
}

export interface Turn {
  index: number;
  code: string;
  model_reply: string;
  user_feedback: string | null;
  /** Guided-only fields; vanilla snapshots omit them entirely. */
  explanation?: string;
  execution?: Execution;
  verdict?: Verdict;
}

export interface Outcome {
  kind: string;
  final_verdict: Verdict | null;
  elapsed_ms: number;
}

export interface Snapshot {
  session_id: string;
  task_id: string;
  question: string;
  language: Language;
  mode: Mode;
  state: string;
  started_at: number;
  deadline_ms: number;
  turns: Turn[];
  last_error: string | null;
  outcome: Outcome | null;
}

export interface TaskSummary {
  task_id: string;
  language: Language;
  question: string;
  difficulty: string | null;
}

export interface TaskTestCase {
  assertion: string;
  expected: string;
}

export interface TaskContext {
  schema_text: string;
  sample_rows: Record<string, (string | number | null)[][]>;
  test_cases: TaskTestCase[];
}

export interface TaskDetail extends TaskSummary {
  context: TaskContext;
}

export type EventKind = "TurnReady" | "AwaitingFeedback" | "Terminal" | "Error";

export interface ApiEvent {
  session_id: string;
  sequence: number;
  kind: EventKind;
  payload: Record<string, unknown>;
}

const TERMINAL_STATES = new Set([
  "Completed",
  "SkippedUnclearQuestion",
  "SkippedUnsolvable",
  "TimedOut",
]);

export function isTerminalState(state: string): boolean {
  return TERMINAL_STATES.has(state);
}

/** Structural check used before rendering; a failed check produces an error
 * banner instead of a half-drawn session. */
export function isSnapshot(value: unknown): value is Snapshot {
  if (typeof value !== "object" || value === null) return false;
  const v = value as Record<string, unknown>;
  return (
    typeof v.session_id === "string" &&
    typeof v.task_id === "string" &&
    typeof v.question === "string" &&
    (v.mode === "guided" || v.mode === "vanilla") &&
    typeof v.state === "string" &&
    typeof v.started_at === "number" &&
    typeof v.deadline_ms === "number" &&
    Array.isArray(v.turns) &&
    v.turns.every(
      (t) =>
        typeof t === "object" &&
        t !== null &&
        typeof (t as Turn).index === "number" &&
        typeof (t as Turn).code === "string" &&
        typeof (t as Turn).model_reply === "string",
    )
  );
}
