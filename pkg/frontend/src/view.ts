import { remainingSeconds } from "./countdown.js";
import type { Mode, Snapshot } from "./types.js";
import { isTerminalState } from "./types.js";

export type PanelId = "context" | "execution" | "chat" | "controls";

/** Everything the renderer needs, derived from the snapshot + clock alone.
 *
 * There is deliberately no other input: reloading the page and re-fetching
 * the same snapshot must reproduce the identical view (the session's truth
 * lives server-side).  `pending` and `notice` are transient UI affordances,
 * not session state.
 */
export interface ViewState {
  mode: Mode;
  panelIds: PanelId[];
  countdownRemainingS: number;
  inputDisabled: boolean;
  outcomeBanner: string | null;
  pending: boolean;
  notice: string | null;
}

export interface ViewOptions {
  pending?: boolean;
  notice?: string | null;
}

const OUTCOME_LABELS: Record<string, string> = {
  CompletedByUser: "Answer accepted",
  SkipUnclear: "Skipped — question unclear",
  SkipUnsolvable: "Skipped — marked unsolvable",
  Timeout: "Time limit reached",
};

export function outcomeLabel(kind: string): string {
  return OUTCOME_LABELS[kind] ?? kind;
}

export function deriveView(
  snapshot: Snapshot,
  nowMs: number,
  opts: ViewOptions = {},
): ViewState {
  const terminal = isTerminalState(snapshot.state) || snapshot.outcome !== null;
  const panelIds: PanelId[] =
    snapshot.mode === "vanilla"
      ? ["context", "chat", "controls"]
      : ["context", "execution", "chat", "controls"];
  return {
    mode: snapshot.mode,
    panelIds,
    countdownRemainingS: terminal ? 0 : remainingSeconds(snapshot, nowMs),
    inputDisabled: terminal,
    outcomeBanner: snapshot.outcome
      ? `${outcomeLabel(snapshot.outcome.kind)} (${snapshot.outcome.kind})`
      : null,
    pending: opts.pending ?? false,
    notice: opts.notice ?? null,
  };
}
