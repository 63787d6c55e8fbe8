/** Browser entry: subscribes to the event stream and keeps the task table,
 * result tree, and console views in sync. */

import { ApiClient, buildVerifyBody, LaunchDialogValues } from "./api.js";
import { applyEvent, DashboardState, initialState } from "./state.js";
import { renderConsole, renderResultTree, renderTaskTable } from "./render.js";
import type { WorkbenchEvent } from "./types.js";

const api = new ApiClient();
let state: DashboardState = initialState();
let activeConsole: number | null = null;

function refresh(): void {
  const tasksEl = document.getElementById("tasks");
  const resultsEl = document.getElementById("results");
  const consoleEl = document.getElementById("console");
  if (tasksEl) tasksEl.innerHTML = renderTaskTable(state);
  if (resultsEl) resultsEl.innerHTML = renderResultTree(state);
  if (consoleEl && activeConsole !== null) {
    consoleEl.innerHTML = renderConsole(state, activeConsole);
  }
}

function subscribe(): void {
  const source = new EventSource("/api/events");
  source.onmessage = (message) => {
    const event = JSON.parse(message.data) as WorkbenchEvent;
    state = applyEvent(state, event);
    refresh();
  };
  source.onerror = () => {
    // EventSource retries automatically; replay makes reconnects lossless.
  };
}

function wireKillButtons(): void {
  document.addEventListener("click", (e) => {
    const target = e.target as HTMLElement;
    if (target.matches("button.kill")) {
      const id = Number(target.dataset.taskId);
      void api.kill(id);
    }
    const row = target.closest("tr[data-task-id]") as HTMLElement | null;
    if (row && !target.matches("button")) {
      const task = state.tasks.get(Number(row.dataset.taskId));
      if (task) {
        activeConsole = task.consoleId;
        refresh();
      }
    }
  });
}

function wireLaunchDialog(): void {
  const form = document.getElementById("launch") as HTMLFormElement | null;
  if (!form) return;
  form.addEventListener("submit", (e) => {
    e.preventDefault();
    const data = new FormData(form);
    const values: LaunchDialogValues = {
      path: String(data.get("path") ?? ""),
      tool: String(data.get("tool") ?? "ofmc"),
      sessions: String(data.get("sessions") ?? "1"),
      oneSessionFirst: data.get("oneSessionFirst") === "on",
      singleGoals: data.get("singleGoals") === "on",
      viaIF: data.get("viaIF") === "on",
      mockScript: String(data.get("mockScript") ?? ""),
    };
    void api.verify(buildVerifyBody(values)).then((r) => {
      activeConsole = r.consoleId;
      refresh();
    });
  });
  void api.protocols().then(({ protocols }) => {
    const select = form.querySelector('select[name="path"]');
    if (!select) return;
    for (const p of protocols) {
      const option = document.createElement("option");
      option.value = p.path;
      option.textContent = `${p.name} (${p.dialect})`;
      select.appendChild(option);
    }
  });
}

export function boot(): void {
  subscribe();
  wireKillButtons();
  wireLaunchDialog();
  refresh();
}

if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", boot);
}
