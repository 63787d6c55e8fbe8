/** Pure HTML-string renderers, shared by the browser entry and the tests. */

import {
  DashboardState,
  GoalRow,
  TaskRow,
  orderedGoals,
  orderedProtocols,
  taskRows,
} from "./state.js";
import type { Verdict } from "./types.js";

export const STATUS_COLORS: Record<Verdict, string> = {
  Attack: "red",
  Inconclusive: "orange",
  Timeout: "orange",
  ToolError: "orange",
  Safe: "green",
};

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderTaskTable(state: DashboardState): string {
  const rows = taskRows(state)
    .map((task) => renderTaskRow(task))
    .join("\n");
  return [
    '<table class="tasks">',
    "<thead><tr><th>Id</th><th>Kind</th><th>State</th><th>Verdict</th><th>Command</th><th></th></tr></thead>",
    `<tbody>\n${rows}\n</tbody>`,
    "</table>",
  ].join("\n");
}

function renderTaskRow(task: TaskRow): string {
  const verdict = task.outcome?.verdict ?? "";
  const killable = task.state === "Waiting" || task.state === "Running";
  const kill = killable
    ? `<button class="kill" data-task-id="${task.id}">kill</button>`
    : "";
  return (
    `<tr data-task-id="${task.id}" class="state-${task.state.toLowerCase()}">` +
    `<td>${task.id}</td><td>${escapeHtml(task.kind)}</td><td>${task.state}</td>` +
    `<td>${verdict}</td><td><code>${escapeHtml(task.commandLine)}</code></td><td>${kill}</td></tr>`
  );
}

export function renderResultTree(state: DashboardState, alphabetical = false): string {
  const sections = orderedProtocols(state, alphabetical).map((protocol) => {
    const goals = orderedGoals(state, protocol)
      .map((goal) => renderGoalRow(goal))
      .join("\n");
    return (
      `<details open class="protocol" data-protocol="${escapeHtml(protocol)}">` +
      `<summary>${escapeHtml(protocol)}</summary>\n<ul>\n${goals}\n</ul></details>`
    );
  });
  return `<div class="results">\n${sections.join("\n")}\n</div>`;
}

function renderGoalRow(goal: GoalRow): string {
  const color = STATUS_COLORS[goal.status];
  const sessions = goal.sessions !== null ? ` (${goal.sessions} sessions)` : "";
  return (
    `<li class="goal status-${goal.status.toLowerCase()}" style="color: ${color}">` +
    `${escapeHtml(goal.goal)}: ${goal.status}${escapeHtml(sessions)}</li>`
  );
}

export function renderConsole(state: DashboardState, consoleId: number): string {
  const chunks = state.consoles.get(consoleId) ?? [];
  const parts = chunks.map((chunk) => {
    let html = "";
    let cursor = 0;
    for (const span of chunk.spans) {
      html += escapeHtml(chunk.text.slice(cursor, span.start));
      html += `<span class="${span.cls}">${escapeHtml(chunk.text.slice(span.start, span.end))}</span>`;
      cursor = span.end;
    }
    html += escapeHtml(chunk.text.slice(cursor));
    return html;
  });
  return `<pre class="console" data-console-id="${consoleId}">${parts.join("")}</pre>`;
}
