/** Wire types for the workbench service event stream and REST API. */

export type Verdict = "Safe" | "Attack" | "Inconclusive" | "Timeout" | "ToolError";

export type TaskState = "Waiting" | "Running" | "Finished" | "Killed" | "TimedOut";

export interface Outcome {
  verdict: Verdict;
  goalName: string | null;
  sessions: number | null;
  excerpt: string;
}

export interface OutputSpan {
  start: number;
  end: number;
  cls: "safe" | "attack" | "inconclusive";
}

export interface BaseEvent {
  seq: number;
  type: string;
  taskId?: number;
  consoleId?: number;
}

export interface TaskEnqueuedEvent extends BaseEvent {
  type: "task-enqueued";
  taskId: number;
  consoleId: number;
  kind: string;
  priority: number;
  commandLine: string;
  meta: Record<string, unknown>;
}

export interface TaskStartedEvent extends BaseEvent {
  type: "task-started";
  taskId: number;
  consoleId: number;
  commandLine: string;
}

export interface OutputChunkEvent extends BaseEvent {
  type: "output-chunk";
  taskId: number;
  consoleId: number;
  text: string;
  spans: OutputSpan[];
}

export interface TaskTerminalEvent extends BaseEvent {
  type: "task-terminal";
  taskId: number;
  consoleId: number;
  state: TaskState;
  outcome: Outcome | null;
  meta: Record<string, unknown>;
  runtime: number;
}

export type WorkbenchEvent =
  | TaskEnqueuedEvent
  | TaskStartedEvent
  | OutputChunkEvent
  | TaskTerminalEvent;

export interface VerifyRequestBody {
  path: string;
  tool: string;
  sessions?: number;
  oneSessionFirst?: boolean;
  singleGoals?: boolean;
  viaIF?: boolean;
  newConsole?: boolean;
  mockScript?: string;
}
