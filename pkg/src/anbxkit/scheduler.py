"""Priority-queue execution of compile/verify tasks.

Non-preemptive: a running task is never paused for a higher-priority
arrival. Dispatch picks the waiting task with the smallest
(priority, enqueue sequence) whenever a slot is free. All mutable state
lives behind one lock; subprocess I/O runs on per-task worker threads that
publish ordered events.
"""

from __future__ import annotations

import enum
import heapq
import os
import queue
import signal
import subprocess
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from .classify import ClassifierRuleSet, OutcomeClass, Verdict, classify_output
from .plans import CommandPlan, ConditionalPipeline, PipelineStep


class TaskKind(enum.Enum):
    COMPILE = "Compile"
    OFMC_ONE_SESSION = "OfmcOneSession"
    PROVERIF = "ProVerif"
    OFMC_MULTI_SESSION = "OfmcMultiSession"
    GENERIC = "Generic"


PRIORITY = {
    TaskKind.COMPILE: 1,
    TaskKind.OFMC_ONE_SESSION: 2,
    TaskKind.PROVERIF: 3,
    TaskKind.GENERIC: 3,
    TaskKind.OFMC_MULTI_SESSION: 4,
}


class TaskState(enum.Enum):
    WAITING = "Waiting"
    RUNNING = "Running"
    FINISHED = "Finished"
    KILLED = "Killed"
    TIMED_OUT = "TimedOut"

TERMINAL_STATES = (TaskState.FINISHED, TaskState.KILLED, TaskState.TIMED_OUT)


@dataclass
class Task:
    id: int
    kind: TaskKind
    priority: int
    plan: CommandPlan
    tool: str
    console_id: int
    enqueue_seq: int
    state: TaskState = TaskState.WAITING
    start_time: Optional[float] = None
    end_time: Optional[float] = None
    outcome: Optional[OutcomeClass] = None
    meta: dict = field(default_factory=dict)
    pipeline: Optional[ConditionalPipeline] = None
    pipeline_index: int = 0
    kill_requested: bool = False
    timed_out: bool = False
    process: Optional[subprocess.Popen] = None
    output: list[str] = field(default_factory=list)

    def captured_output(self) -> str:
        return "".join(self.output)


@dataclass(frozen=True)
class TaskRow:
    """Immutable task-table projection."""

    id: int
    kind: str
    priority: int
    state: str
    console_id: int
    waiting: bool
    runtime: float
    command_line: str
    outcome: Optional[OutcomeClass]
    meta: dict


@dataclass
class SchedulerConfig:
    max_parallel: int = 0  # 0 -> min(4, logical cores)
    timeout_minutes: float = 0.0  # 0 disables the timeout
    timeout_seconds_override: Optional[float] = None  # test hook
    grace_seconds: float = 2.0

    def resolved_max_parallel(self) -> int:
        if self.max_parallel >= 1:
            return self.max_parallel
        return min(4, os.cpu_count() or 1)

    def timeout_seconds(self) -> float:
        if self.timeout_seconds_override is not None:
            return self.timeout_seconds_override
        return self.timeout_minutes * 60.0


class EventBus:
    """Fan-out of ordered scheduler events; per-subscriber FIFO queues."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._seq = 0
        self._subscribers: list[queue.Queue] = []
        self.history: list[dict] = []

    def publish(self, event: dict) -> None:
        with self._lock:
            self._seq += 1
            event = {"seq": self._seq, **event}
            self.history.append(event)
            for q in self._subscribers:
                q.put(event)

    def subscribe(self, replay: bool = False) -> queue.Queue:
        q: queue.Queue = queue.Queue()
        with self._lock:
            if replay:
                for event in self.history:
                    q.put(event)
            self._subscribers.append(q)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)


class Scheduler:
    def __init__(
        self,
        config: Optional[SchedulerConfig] = None,
        rule_sets: Optional[dict[str, ClassifierRuleSet]] = None,
        clock: Callable[[], float] = time.monotonic,
    ) -> None:
        self.config = config or SchedulerConfig()
        self.rule_sets = rule_sets
        self.clock = clock
        self.events = EventBus()

        self._lock = threading.RLock()
        self._idle = threading.Condition(self._lock)
        self._tasks: dict[int, Task] = {}
        self._heap: list[tuple[int, int, int]] = []  # (priority, seq, id)
        self._next_id = 1
        self._next_seq = 1
        self._next_console = 0
        self._max_parallel = self.config.resolved_max_parallel()
        self._running = 0
        self._increments = 0
        self._decrements = 0
        self._shutdown = False
        self._monitor = threading.Thread(target=self._monitor_loop, daemon=True)
        self._monitor.start()

    # -- public API ---------------------------------------------------------

    def new_console(self) -> int:
        with self._lock:
            self._next_console += 1
            return self._next_console

    def submit(
        self,
        kind: TaskKind,
        plan: CommandPlan,
        tool: str = "generic",
        console_id: Optional[int] = None,
        meta: Optional[dict] = None,
        pipeline: Optional[ConditionalPipeline] = None,
        pipeline_index: int = 0,
    ) -> int:
        with self._lock:
            if console_id is None:
                console_id = self.new_console()
            task = Task(
                id=self._next_id,
                kind=kind,
                priority=PRIORITY[kind],
                plan=plan,
                tool=tool,
                console_id=console_id,
                enqueue_seq=self._next_seq,
                meta=dict(meta or {}),
                pipeline=pipeline,
                pipeline_index=pipeline_index,
            )
            self._next_id += 1
            self._next_seq += 1
            self._tasks[task.id] = task
            heapq.heappush(self._heap, (task.priority, task.enqueue_seq, task.id))
            self.events.publish(
                {
                    "type": "task-enqueued",
                    "taskId": task.id,
                    "consoleId": task.console_id,
                    "kind": kind.value,
                    "priority": task.priority,
                    "commandLine": plan.command_line(),
                    "meta": task.meta,
                }
            )
            self._dispatch_locked()
            return task.id

    def submit_pipeline(self, pipeline: ConditionalPipeline, console_id: Optional[int] = None) -> int:
        """Enqueue the first step; continuations follow on the same console."""
        if console_id is None:
            console_id = self.new_console()
        step = pipeline.steps[0]
        return self.submit(
            TaskKind(step.kind),
            step.plan,
            tool=step.tool,
            console_id=console_id,
            meta=step.meta,
            pipeline=pipeline,
            pipeline_index=0,
        )

    def set_max_parallel(self, n: int) -> None:
        if n < 1:
            raise ValueError("max parallel must be >= 1")
        with self._lock:
            self._max_parallel = n
            self._dispatch_locked()

    @property
    def max_parallel(self) -> int:
        return self._max_parallel

    def kill(self, task_ids) -> None:
        with self._lock:
            missing = [t for t in task_ids if t not in self._tasks]
            if missing:
                raise KeyError(f"no such task(s): {missing}")
            for task_id in task_ids:
                task = self._tasks[task_id]
                if task.state is TaskState.WAITING:
                    task.kill_requested = True
                    self._terminalize_locked(task, TaskState.KILLED, outcome=None)
                elif task.state is TaskState.RUNNING:
                    task.kill_requested = True
                    self._signal_task(task)

    def kill_all(self) -> None:
        with self._lock:
            self.kill([t.id for t in self._tasks.values() if t.state not in TERMINAL_STATES])

    def snapshot(self) -> list[TaskRow]:
        with self._lock:
            now = self.clock()
            rows = []
            for task in sorted(self._tasks.values(), key=lambda t: t.enqueue_seq):
                if task.start_time is None:
                    runtime = 0.0
                elif task.end_time is None:
                    runtime = max(0.0, now - task.start_time)
                else:
                    runtime = max(0.0, task.end_time - task.start_time)
                rows.append(
                    TaskRow(
                        id=task.id,
                        kind=task.kind.value,
                        priority=task.priority,
                        state=task.state.value,
                        console_id=task.console_id,
                        waiting=task.state is TaskState.WAITING,
                        runtime=runtime,
                        command_line=task.plan.command_line(),
                        outcome=task.outcome,
                        meta=dict(task.meta),
                    )
                )
            return rows

    def get_task(self, task_id: int) -> Optional[Task]:
        with self._lock:
            return self._tasks.get(task_id)

    def running_count(self) -> int:
        with self._lock:
            return self._running

    def counter_balance(self) -> tuple[int, int]:
        with self._lock:
            return self._increments, self._decrements

    def wait_all(self, timeout: Optional[float] = None) -> bool:
        """Block until every submitted task is terminal."""
        deadline = None if timeout is None else time.monotonic() + timeout
        with self._idle:
            while True:
                pending = self._running > 0 or any(
                    t.state is TaskState.WAITING for t in self._tasks.values()
                )
                if not pending:
                    return True
                remaining = None if deadline is None else deadline - time.monotonic()
                if remaining is not None and remaining <= 0:
                    return False
                self._idle.wait(timeout=0.05 if remaining is None else min(0.05, remaining))

    def shutdown(self) -> None:
        with self._lock:
            self._shutdown = True
        self.kill_all()
        self.wait_all(timeout=self.config.grace_seconds + 5)

    # -- internals ----------------------------------------------------------

    def _dispatch_locked(self) -> None:
        while self._heap and self._running < self._max_parallel:
            _, _, task_id = heapq.heappop(self._heap)
            task = self._tasks[task_id]
            if task.state is not TaskState.WAITING:
                continue
            task.state = TaskState.RUNNING
            task.start_time = self.clock()
            self._running += 1
            self._increments += 1
            self.events.publish(
                {
                    "type": "task-started",
                    "taskId": task.id,
                    "consoleId": task.console_id,
                    "commandLine": task.plan.command_line(),
                }
            )
            worker = threading.Thread(target=self._run_task, args=(task,), daemon=True)
            worker.start()

    def _run_task(self, task: Task) -> None:
        try:
            proc = subprocess.Popen(
                task.plan.argv(),
                cwd=task.plan.working_dir,
                env={**os.environ, **dict(task.plan.env)} if task.plan.env else None,
                stdin=subprocess.PIPE if task.plan.stdin_data is not None else subprocess.DEVNULL,
                stdout=subprocess.PIPE,
                stderr=subprocess.STDOUT,
                start_new_session=True,
            )
        except OSError as exc:
            outcome = OutcomeClass(Verdict.TOOL_ERROR, excerpt=str(exc))
            with self._lock:
                self._publish_chunk(task, f"failed to start: {exc}\n")
                self._finish_running_locked(task, TaskState.FINISHED, outcome)
            return

        with self._lock:
            task.process = proc
            if task.kill_requested:
                self._signal_task(task)

        if task.plan.stdin_data is not None and proc.stdin is not None:
            try:
                proc.stdin.write(task.plan.stdin_data)
                proc.stdin.close()
            except OSError:
                pass

        assert proc.stdout is not None
        while True:
            chunk = proc.stdout.read(4096)
            if not chunk:
                break
            text = chunk.decode("utf-8", errors="replace")
            with self._lock:
                task.output.append(text)
                self._publish_chunk(task, text)
        exit_code = proc.wait()

        with self._lock:
            if task.timed_out:
                state = TaskState.TIMED_OUT
                outcome = OutcomeClass(Verdict.TIMEOUT, excerpt="terminated by global timeout")
                self._publish_chunk(task, f"[timed out after {self._runtime(task):.1f}s]\n")
            elif task.kill_requested:
                state = TaskState.KILLED
                outcome = None
                self._publish_chunk(task, f"[killed after {self._runtime(task):.1f}s]\n")
            else:
                state = TaskState.FINISHED
                outcome = classify_output(
                    task.tool,
                    task.captured_output(),
                    exit_code,
                    rule_sets=self.rule_sets,
                    protocol_name=task.meta.get("protocol"),
                )
            self._finish_running_locked(task, state, outcome)

    def _runtime(self, task: Task) -> float:
        start = task.start_time or 0.0
        return max(0.0, self.clock() - start)

    def _publish_chunk(self, task: Task, text: str) -> None:
        from .classify import classify_spans

        self.events.publish(
            {
                "type": "output-chunk",
                "taskId": task.id,
                "consoleId": task.console_id,
                "text": text,
                "spans": classify_spans(task.tool, text, self.rule_sets),
            }
        )

    def _finish_running_locked(self, task: Task, state: TaskState, outcome: Optional[OutcomeClass]) -> None:
        self._running -= 1
        self._decrements += 1
        self._terminalize_locked(task, state, outcome)
        self._dispatch_locked()

    def _terminalize_locked(self, task: Task, state: TaskState, outcome: Optional[OutcomeClass]) -> None:
        task.state = state
        task.end_time = self.clock()
        if task.start_time is None:
            task.start_time = task.end_time
        task.outcome = outcome
        self.events.publish(
            {
                "type": "task-terminal",
                "taskId": task.id,
                "consoleId": task.console_id,
                "state": state.value,
                "outcome": outcome.to_record() if outcome else None,
                "meta": dict(task.meta),
                "runtime": max(0.0, (task.end_time or 0) - (task.start_time or 0)),
            }
        )
        self._continue_pipeline_locked(task)
        self._idle.notify_all()

    def _continue_pipeline_locked(self, task: Task) -> None:
        pipeline = task.pipeline
        if pipeline is None:
            return
        next_index = task.pipeline_index + 1
        if next_index >= len(pipeline.steps):
            return
        if task.state is not TaskState.FINISHED:
            return
        step: PipelineStep = pipeline.steps[next_index]
        if step.when is not None and not step.when(task.outcome):
            return
        self.submit(
            TaskKind(step.kind),
            step.plan,
            tool=step.tool,
            console_id=task.console_id,  # continuations share the parent console
            meta=step.meta,
            pipeline=pipeline,
            pipeline_index=next_index,
        )

    def _signal_task(self, task: Task) -> None:
        proc = task.process
        if proc is None or proc.poll() is not None:
            return
        try:
            os.killpg(proc.pid, signal.SIGTERM)
        except (ProcessLookupError, PermissionError):
            return
        timer = threading.Timer(self.config.grace_seconds, self._force_kill, args=(proc,))
        timer.daemon = True
        timer.start()

    @staticmethod
    def _force_kill(proc: subprocess.Popen) -> None:
        if proc.poll() is None:
            try:
                os.killpg(proc.pid, signal.SIGKILL)
            except (ProcessLookupError, PermissionError):
                pass

    def _monitor_loop(self) -> None:
        while True:
            time.sleep(0.05)
            with self._lock:
                if self._shutdown:
                    return
                limit = self.config.timeout_seconds()
                if limit <= 0:
                    continue
                now = self.clock()
                for task in self._tasks.values():
                    if task.state is TaskState.RUNNING and not task.timed_out:
                        if task.start_time is not None and now - task.start_time > limit:
                            task.timed_out = True
                            self._signal_task(task)
