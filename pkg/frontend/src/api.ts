/** Thin client for the workbench REST API. */

import type { VerifyRequestBody } from "./types.js";

export interface LaunchDialogValues {
  path: string;
  tool: string;
  sessions: string;
  oneSessionFirst: boolean;
  singleGoals: boolean;
  viaIF: boolean;
  mockScript: string;
}

/** Translate launch-dialog form values into a verify request body. */
export function buildVerifyBody(values: LaunchDialogValues): VerifyRequestBody {
  const body: VerifyRequestBody = {
    path: values.path,
    tool: values.tool,
    newConsole: true,
  };
  const sessions = parseInt(values.sessions, 10);
  if (!Number.isNaN(sessions) && sessions >= 1) body.sessions = sessions;
  if (values.oneSessionFirst) body.oneSessionFirst = true;
  if (values.singleGoals) body.singleGoals = true;
  if (values.viaIF) body.viaIF = true;
  if (values.mockScript.trim() !== "") body.mockScript = values.mockScript.trim();
  return body;
}

export class ApiClient {
  constructor(private readonly base: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.base + path, init);
    if (!response.ok) {
      const detail = await response.text();
      throw new Error(`${response.status} ${path}: ${detail}`);
    }
    return (await response.json()) as T;
  }

  protocols(): Promise<{ protocols: { name: string; path: string; dialect: string }[] }> {
    return this.request("/api/protocols");
  }

  check(path: string): Promise<{ diagnostics: unknown[] }> {
    return this.request("/api/check", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ path }),
    });
  }

  verify(body: VerifyRequestBody): Promise<{ taskIds: number[]; consoleId: number }> {
    return this.request("/api/verify", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  tasks(): Promise<{ tasks: { id: number; state: string }[] }> {
    return this.request("/api/tasks");
  }

  kill(taskId: number): Promise<{ killed: number }> {
    return this.request(`/api/tasks/${taskId}/kill`, { method: "POST" });
  }

  results(): Promise<{ results: unknown[] }> {
    return this.request("/api/results");
  }
}
