/** Captured wire payloads (recorded from the real service) plus helpers.
 * Loaders parse fresh on every call so tests can mutate freely.
 */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { ApiEvent, Snapshot, TaskDetail } from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));

function load<T>(name: string): T {
  return JSON.parse(readFileSync(join(here, "fixtures", name), "utf-8")) as T;
}

export const guidedOpen = (): Snapshot => load("snapshot_guided_open.json");
export const guidedDone = (): Snapshot => load("snapshot_guided_done.json");
export const pythonOpen = (): Snapshot => load("snapshot_python_open.json");
export const vanillaOpen = (): Snapshot => load("snapshot_vanilla_open.json");
export const taskSql = (): TaskDetail => load("task_sql.json");
export const taskPython = (): TaskDetail => load("task_python.json");

export const FEEDBACK = "I only need the grade, not the ID.";

/** The event sequence the service publishes for the canned guided run. */
export function guidedEvents(): ApiEvent[] {
  const done = guidedDone();
  const sid = done.session_id;
  const strip = (turn: Snapshot["turns"][number]) => ({
    ...turn,
    user_feedback: null,
  });
  return [
    { session_id: sid, sequence: 1, kind: "TurnReady", payload: strip(done.turns[0]) as never },
    { session_id: sid, sequence: 2, kind: "AwaitingFeedback", payload: { turn_count: 1 } },
    { session_id: sid, sequence: 3, kind: "TurnReady", payload: strip(done.turns[1]) as never },
    { session_id: sid, sequence: 4, kind: "AwaitingFeedback", payload: { turn_count: 2 } },
    {
      session_id: sid,
      sequence: 5,
      kind: "Terminal",
      payload: { state: done.state, outcome: done.outcome as never },
    },
  ];
}

export function sseFrame(event: ApiEvent): string {
  return `id: ${event.sequence}\nevent: ${event.kind}\ndata: ${JSON.stringify(event)}\n\n`;
}
