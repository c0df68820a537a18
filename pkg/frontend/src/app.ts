/** Browser bootstrap: query-string config, DOM wiring, 2 Hz countdown tick.
 * All behavior lives in the controller/renderers; this file only mounts them.
 */

import { ApiClient } from "./client.js";
import { SessionController } from "./controller.js";
import { formatCountdown, remainingSeconds } from "./countdown.js";
import type { Mode, SkipReason } from "./types.js";

function params(): URLSearchParams {
  return new URLSearchParams(window.location.search);
}

function mount(controller: SessionController): void {
  const root = document.getElementById("panels");
  if (!root) return;
  const draft =
    (document.getElementById("feedback-input") as HTMLTextAreaElement | null)
      ?.value ?? "";
  root.innerHTML = controller
    .render()
    .map(
      (region) =>
        `<section class="panel" id="panel-${region.id}">` +
        `<h2>${region.id}</h2>${region.html}</section>`,
    )
    .join("\n");
  const input = document.getElementById(
    "feedback-input",
  ) as HTMLTextAreaElement | null;
  if (input && !input.disabled) input.value = draft;
}

async function runSession(
  client: ApiClient,
  taskId: string,
  mode: Mode,
): Promise<void> {
  const controller = await SessionController.open(client, taskId, mode);
  mount(controller);

  const root = document.getElementById("panels");
  root?.addEventListener("click", async (domEvent) => {
    const target = domEvent.target as HTMLElement;
    const input = document.getElementById(
      "feedback-input",
    ) as HTMLTextAreaElement | null;
    if (target.id === "submit-feedback" && input) {
      const ok = await controller.submitFeedback(input.value);
      if (ok) input.value = "";
    } else if (target.id === "complete") {
      await controller.complete();
    } else if (target.dataset.reason) {
      await controller.skip(target.dataset.reason as SkipReason);
    } else {
      return;
    }
    mount(controller);
  });

  window.setInterval(() => {
    const span = document.querySelector(".countdown");
    const snapshot = controller.currentSnapshot();
    if (span && snapshot.outcome === null) {
      const left = remainingSeconds(snapshot, Date.now());
      span.textContent = formatCountdown(left);
      span.setAttribute("data-remaining-s", String(left));
    }
  }, 500);

  controller
    .subscribe(undefined, () => mount(controller))
    .catch((err) => console.error("event stream closed:", err));
}

async function renderTaskPicker(client: ApiClient): Promise<void> {
  const root = document.getElementById("panels");
  if (!root) return;
  const tasks = await client.listTasks();
  root.innerHTML =
    `<section class="panel" id="panel-picker"><h2>Pick a task</h2><ul>` +
    tasks
      .map(
        (t) =>
          `<li><a href="?task=${encodeURIComponent(t.task_id)}&mode=guided">` +
          `${t.task_id}</a> [${t.language}${t.difficulty ? ", " + t.difficulty : ""}] ` +
          `${t.question}</li>`,
      )
      .join("\n") +
    `</ul></section>`;
}

export async function main(): Promise<void> {
  const q = params();
  const base = q.get("api") ?? "http://localhost:8321";
  const client = new ApiClient(base);
  const taskId = q.get("task");
  const mode = (q.get("mode") ?? "guided") as Mode;
  if (taskId) {
    await runSession(client, taskId, mode);
  } else {
    await renderTaskPicker(client);
  }
}

if (typeof document !== "undefined") {
  main().catch((err) => {
    const root = document.getElementById("panels");
    if (root) {
      root.innerHTML = `<div class="error-banner">${String(err)}</div>`;
    }
  });
}
