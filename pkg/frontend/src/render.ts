import { formatCountdown } from "./countdown.js";
import type { Snapshot, TaskDetail, Turn } from "./types.js";
import { isSnapshot } from "./types.js";
import type { PanelId, ViewOptions } from "./view.js";
import { deriveView } from "./view.js";

/** One rendered panel region; the id list *is* the DOM region list. */
export interface Region {
  id: PanelId | "error";
  html: string;
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

interface SchemaTable {
  name: string;
  columns: string[];
}

/** schema_text lines look like `table Friend (student_id INT, friend_id INT)`. */
export function parseSchemaText(schemaText: string): SchemaTable[] {
  const tables: SchemaTable[] = [];
  for (const line of schemaText.split("\n")) {
    const match = /^table\s+(\S+)\s+\((.*)\)\s*$/.exec(line.trim());
    if (!match) continue;
    const columns = match[2]
      .split(",")
      .map((col) => col.trim().split(/\s+/)[0])
      .filter((name) => name.length > 0);
    tables.push({ name: match[1], columns });
  }
  return tables;
}

function valueCell(value: string | number | null): string {
  return `<td>${value === null ? "" : escapeHtml(String(value))}</td>`;
}

export function renderContextPanel(
  snapshot: Snapshot,
  task: TaskDetail | null,
): string {
  const parts = [`<p class="question">${escapeHtml(snapshot.question)}</p>`];
  if (task === null) {
    parts.push(`<p class="context-missing">Task context unavailable.</p>`);
    return parts.join("\n");
  }
  if (snapshot.language === "sql") {
    for (const table of parseSchemaText(task.context.schema_text)) {
      const rows = task.context.sample_rows[table.name] ?? [];
      const head = table.columns
        .map((col) => `<th>${escapeHtml(col)}</th>`)
        .join("");
      const body = rows
        .slice(0, 3)
        .map(
          (row) =>
            `<tr class="sample-row">${row.map(valueCell).join("")}</tr>`,
        )
        .join("\n");
      parts.push(
        `<h3 class="schema-table-name">${escapeHtml(table.name)}</h3>\n` +
          `<table class="schema-table"><thead><tr>${head}</tr></thead>` +
          `<tbody>\n${body}\n</tbody></table>`,
      );
    }
  } else {
    const cases = task.context.test_cases
      .map((c) => `<li class="test-case"><code>${escapeHtml(c.assertion)}</code></li>`)
      .join("\n");
    parts.push(`<ul class="test-cases">\n${cases}\n</ul>`);
  }
  return parts.join("\n");
}

export function renderExecutionPanel(snapshot: Snapshot): string {
  const latest = [...snapshot.turns].reverse().find((t) => t.execution);
  if (!latest || !latest.execution) {
    return `<p class="no-execution">No execution results yet.</p>`;
  }
  const exec = latest.execution;
  const parts = [
    `<p class="execution-status" data-turn-index="${latest.index}">` +
      `Turn ${latest.index + 1} — ${escapeHtml(exec.status)}</p>`,
  ];
  if (latest.verdict) {
    const cls = latest.verdict.success ? "verdict-ok" : "verdict-bad";
    parts.push(
      `<span class="verdict ${cls}">${escapeHtml(latest.verdict.reason)}</span>`,
    );
  }
  if (exec.sql_rows.length > 0) {
    const body = exec.sql_rows
      .map(
        (row) => `<tr class="result-row">${row.map(valueCell).join("")}</tr>`,
      )
      .join("\n");
    parts.push(`<table class="result-table"><tbody>\n${body}\n</tbody></table>`);
  }
  if (exec.case_results.length > 0) {
    const items = exec.case_results
      .map((c) => {
        const cls = c.passed ? "case-pass" : "case-fail";
        const mark = c.passed ? "PASS" : "FAIL";
        const detail = c.detail
          ? `<pre class="case-detail">${escapeHtml(c.detail)}</pre>`
          : "";
        return `<li class="case ${cls}">case ${c.index + 1}: ${mark}${detail}</li>`;
      })
      .join("\n");
    parts.push(`<ul class="case-results">\n${items}\n</ul>`);
  }
  if (exec.stderr_excerpt) {
    parts.push(`<pre class="stderr">${escapeHtml(exec.stderr_excerpt)}</pre>`);
  }
  return parts.join("\n");
}

function renderTurn(turn: Turn, mode: Snapshot["mode"]): string {
  const parts = [`<div class="turn" data-turn-index="${turn.index}">`];
  if (mode === "guided") {
    parts.push(`<pre class="code">${escapeHtml(turn.code)}</pre>`);
    // The explanation gets a visually distinct block: the user is meant to
    // judge it, not the code.
    parts.push(
      `<div class="explanation">${escapeHtml(turn.explanation ?? "")}</div>`,
    );
  } else {
    parts.push(
      `<div class="msg model model-text">${escapeHtml(turn.model_reply)}</div>`,
    );
  }
  if (turn.user_feedback) {
    parts.push(
      `<div class="msg user feedback">${escapeHtml(turn.user_feedback)}</div>`,
    );
  }
  parts.push(`</div>`);
  return parts.join("\n");
}

export function renderChatPanel(snapshot: Snapshot, pending: boolean): string {
  const parts = [
    `<div class="msg user question">${escapeHtml(snapshot.question)}</div>`,
  ];
  for (const turn of snapshot.turns) {
    parts.push(renderTurn(turn, snapshot.mode));
  }
  if (snapshot.last_error) {
    parts.push(
      `<div class="error-banner inline">${escapeHtml(snapshot.last_error)}</div>`,
    );
  }
  if (pending) {
    parts.push(`<div class="pending-indicator">Working…</div>`);
  }
  return parts.join("\n");
}

export function renderControlsPanel(
  view: ReturnType<typeof deriveView>,
): string {
  const disabled = view.inputDisabled ? " disabled" : "";
  const parts = [
    `<span class="countdown" data-remaining-s="${view.countdownRemainingS}">` +
      `${formatCountdown(view.countdownRemainingS)}</span>`,
  ];
  if (view.outcomeBanner) {
    parts.push(`<div class="outcome-banner">${escapeHtml(view.outcomeBanner)}</div>`);
  }
  if (view.notice) {
    parts.push(`<div class="notice">${escapeHtml(view.notice)}</div>`);
  }
  parts.push(
    `<textarea id="feedback-input" placeholder="Describe what is wrong…"${disabled}></textarea>`,
    `<button id="submit-feedback"${disabled}>Submit</button>`,
    `<button id="complete"${disabled}>Complete</button>`,
    `<button id="skip-unclear" data-reason="unclear"${disabled}>Skip — question unclear</button>`,
    `<button id="skip-unsolvable" data-reason="unsolvable"${disabled}>Skip — can't be solved</button>`,
  );
  return parts.join("\n");
}

/** Render the whole session as an ordered list of panel regions.
 *
 * Vanilla mode has no execution region at all (not merely hidden).  A
 * malformed snapshot yields a single error region rather than a partial,
 * silently trimmed view.
 */
export function renderSession(
  snapshotValue: unknown,
  task: TaskDetail | null,
  nowMs: number,
  opts: ViewOptions = {},
): Region[] {
  if (!isSnapshot(snapshotValue)) {
    return [
      {
        id: "error",
        html: `<div class="error-banner">Malformed session snapshot; refusing to render a partial view.</div>`,
      },
    ];
  }
  const snapshot = snapshotValue;
  const view = deriveView(snapshot, nowMs, opts);
  const regions: Region[] = [];
  for (const id of view.panelIds) {
    switch (id) {
      case "context":
        regions.push({ id, html: renderContextPanel(snapshot, task) });
        break;
      case "execution":
        regions.push({ id, html: renderExecutionPanel(snapshot) });
        break;
      case "chat":
        regions.push({ id, html: renderChatPanel(snapshot, view.pending) });
        break;
      case "controls":
        regions.push({ id, html: renderControlsPanel(view) });
        break;
    }
  }
  return regions;
}
