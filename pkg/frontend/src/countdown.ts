import type { Snapshot } from "./types.js";

/** Whole seconds left on the server's clock.
 *
 * The deadline is server-authoritative: the display is computed fresh from
 * the snapshot's started_at + deadline_ms every tick, never from a locally
 * decremented counter.  Flooring means the shown value can never exceed the
 * true remaining time; it may lag it by strictly less than one second.
 */
export function remainingSeconds(
  snapshot: Pick<Snapshot, "started_at" | "deadline_ms">,
  nowMs: number,
): number {
  const leftMs = snapshot.started_at + snapshot.deadline_ms - nowMs;
  return Math.max(0, Math.floor(leftMs / 1000));
}

export function formatCountdown(seconds: number): string {
  const m = Math.floor(seconds / 60);
  const s = seconds % 60;
  return `${m}:${String(s).padStart(2, "0")}`;
}
