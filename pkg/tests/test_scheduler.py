"""Scheduler behavior: priorities, parallelism cap, kill, timeout, pipelines."""

from __future__ import annotations

import random
import sys
import threading
import time

import pytest

from anbxkit.classify import Verdict
from anbxkit.plans import CommandPlan, ConditionalPipeline, PipelineStep
from anbxkit.scheduler import (
    PRIORITY,
    Scheduler,
    SchedulerConfig,
    TaskKind,
    TaskState,
)


def _sleep_plan(seconds: float) -> CommandPlan:
    return CommandPlan(sys.executable, ("-c", f"import time; time.sleep({seconds})"))


def _echo_plan(text: str) -> CommandPlan:
    return CommandPlan(sys.executable, ("-c", f"print({text!r})"))


@pytest.fixture
def scheduler():
    sched = Scheduler(SchedulerConfig(max_parallel=2))
    yield sched
    sched.shutdown()


def _terminal_order(sched: Scheduler) -> list[int]:
    return [e["taskId"] for e in sched.events.history if e["type"] == "task-started"]


# -- priorities --------------------------------------------------------------


def test_priority_values():
    assert PRIORITY[TaskKind.COMPILE] == 1
    assert PRIORITY[TaskKind.OFMC_ONE_SESSION] == 2
    assert PRIORITY[TaskKind.PROVERIF] == 3
    assert PRIORITY[TaskKind.GENERIC] == 3
    assert PRIORITY[TaskKind.OFMC_MULTI_SESSION] == 4


def test_start_order_respects_priority_then_fifo():
    sched = Scheduler(SchedulerConfig(max_parallel=1))
    try:
        # Occupy the single slot so later submissions queue up.
        blocker = sched.submit(TaskKind.GENERIC, _sleep_plan(0.4))
        time.sleep(0.05)
        low1 = sched.submit(TaskKind.OFMC_MULTI_SESSION, _echo_plan("m1"))
        high = sched.submit(TaskKind.COMPILE, _echo_plan("c"))
        mid = sched.submit(TaskKind.OFMC_ONE_SESSION, _echo_plan("o"))
        low2 = sched.submit(TaskKind.OFMC_MULTI_SESSION, _echo_plan("m2"))
        assert sched.wait_all(timeout=10)
        order = _terminal_order(sched)
        assert order == [blocker, high, mid, low1, low2]
    finally:
        sched.shutdown()


def test_fifo_within_same_priority():
    sched = Scheduler(SchedulerConfig(max_parallel=1))
    try:
        blocker = sched.submit(TaskKind.GENERIC, _sleep_plan(0.3))
        time.sleep(0.05)
        ids = [sched.submit(TaskKind.GENERIC, _echo_plan(f"t{i}")) for i in range(5)]
        assert sched.wait_all(timeout=10)
        assert _terminal_order(sched) == [blocker, *ids]
    finally:
        sched.shutdown()


# -- parallelism cap ---------------------------------------------------------


def test_running_count_never_exceeds_max_parallel(scheduler):
    for _ in range(8):
        scheduler.submit(TaskKind.GENERIC, _sleep_plan(0.15))
    peak = 0
    deadline = time.monotonic() + 10
    while time.monotonic() < deadline:
        peak = max(peak, scheduler.running_count())
        if scheduler.wait_all(timeout=0.01):
            break
    assert peak <= 2
    assert scheduler.wait_all(timeout=10)


def test_decrease_max_parallel_does_not_interrupt_running():
    sched = Scheduler(SchedulerConfig(max_parallel=3))
    try:
        ids = [sched.submit(TaskKind.GENERIC, _sleep_plan(0.4)) for _ in range(3)]
        time.sleep(0.15)
        assert sched.running_count() == 3
        sched.set_max_parallel(1)
        # Still three running: the decrease applies to future dispatch only.
        assert sched.running_count() == 3
        assert sched.wait_all(timeout=10)
        for task_id in ids:
            task = sched.get_task(task_id)
            assert task is not None and task.state is TaskState.FINISHED
    finally:
        sched.shutdown()


def test_increase_max_parallel_dispatches_waiting():
    sched = Scheduler(SchedulerConfig(max_parallel=1))
    try:
        for _ in range(3):
            sched.submit(TaskKind.GENERIC, _sleep_plan(0.3))
        time.sleep(0.1)
        assert sched.running_count() == 1
        sched.set_max_parallel(3)
        time.sleep(0.1)
        assert sched.running_count() == 3
        assert sched.wait_all(timeout=10)
    finally:
        sched.shutdown()


# -- kill --------------------------------------------------------------------


def test_kill_waiting_task_terminal_immediately():
    sched = Scheduler(SchedulerConfig(max_parallel=1))
    try:
        sched.submit(TaskKind.GENERIC, _sleep_plan(0.3))
        waiting = sched.submit(TaskKind.GENERIC, _sleep_plan(5))
        sched.kill([waiting])
        task = sched.get_task(waiting)
        assert task is not None and task.state is TaskState.KILLED
        assert sched.wait_all(timeout=10)
    finally:
        sched.shutdown()


def test_kill_running_task(scheduler):
    task_id = scheduler.submit(TaskKind.GENERIC, _sleep_plan(30))
    time.sleep(0.2)
    scheduler.kill([task_id])
    assert scheduler.wait_all(timeout=10)
    task = scheduler.get_task(task_id)
    assert task is not None and task.state is TaskState.KILLED
    notes = [e for e in scheduler.events.history if e["type"] == "output-chunk" and "[killed" in e["text"]]
    assert notes


def test_kill_unknown_task_raises(scheduler):
    with pytest.raises(KeyError):
        scheduler.kill([999])


def test_sigterm_resistant_child_force_killed():
    code = (
        "import signal, time\n"
        "signal.signal(signal.SIGTERM, signal.SIG_IGN)\n"
        "print('armored', flush=True)\n"
        "time.sleep(30)\n"
    )
    sched = Scheduler(SchedulerConfig(max_parallel=1, grace_seconds=0.3))
    try:
        task_id = sched.submit(TaskKind.GENERIC, CommandPlan(sys.executable, ("-c", code)))
        deadline = time.monotonic() + 5
        while time.monotonic() < deadline:
            task = sched.get_task(task_id)
            if task and any("armored" in c for c in task.output):
                break
            time.sleep(0.02)
        start = time.monotonic()
        sched.kill([task_id])
        assert sched.wait_all(timeout=5)
        assert time.monotonic() - start < 3  # SIGKILL after the grace window
    finally:
        sched.shutdown()


# -- timeout -----------------------------------------------------------------


def test_timeout_zero_never_times_out(scheduler):
    task_id = scheduler.submit(TaskKind.GENERIC, _sleep_plan(0.3))
    assert scheduler.wait_all(timeout=10)
    task = scheduler.get_task(task_id)
    assert task is not None and task.state is TaskState.FINISHED


def test_scaled_timeout_kills_overlong_task():
    grace = 0.3
    sched = Scheduler(SchedulerConfig(max_parallel=1, timeout_seconds_override=0.3, grace_seconds=grace))
    try:
        start = time.monotonic()
        task_id = sched.submit(TaskKind.GENERIC, _sleep_plan(30))
        assert sched.wait_all(timeout=10)
        elapsed = time.monotonic() - start
        task = sched.get_task(task_id)
        assert task is not None and task.state is TaskState.TIMED_OUT
        assert task.outcome is not None and task.outcome.verdict is Verdict.TIMEOUT
        assert elapsed < 0.3 + 2 * grace + 1.0
    finally:
        sched.shutdown()


# -- pipelines ---------------------------------------------------------------


def _mock_pipeline(tmp_path, step1_class: str, n: int = 3):
    script1 = tmp_path / "s1.mock"
    script1.write_text(f"class={step1_class}\n")
    script2 = tmp_path / "s2.mock"
    script2.write_text("class=Safe\nsessions=3\n")
    plan1 = CommandPlan(sys.executable, ("-m", "anbxkit.mock_verifier", "--script", str(script1)))
    plan2 = CommandPlan(sys.executable, ("-m", "anbxkit.mock_verifier", "--script", str(script2)))
    return ConditionalPipeline(
        [
            PipelineStep("OfmcOneSession", "mock", plan1, meta={"sessions": 1}),
            PipelineStep(
                "OfmcMultiSession",
                "mock",
                plan2,
                when=lambda o: o is not None and o.verdict is Verdict.SAFE,
                meta={"sessions": n},
            ),
        ]
    )


def test_one_session_first_attack_stops_pipeline(tmp_path):
    sched = Scheduler(SchedulerConfig(max_parallel=2))
    try:
        sched.submit_pipeline(_mock_pipeline(tmp_path, "Attack"))
        assert sched.wait_all(timeout=10)
        time.sleep(0.2)
        assert sched.wait_all(timeout=5)
        assert len(sched.snapshot()) == 1  # second step never enqueued
    finally:
        sched.shutdown()


def test_one_session_first_safe_escalates(tmp_path):
    sched = Scheduler(SchedulerConfig(max_parallel=2))
    try:
        first = sched.submit_pipeline(_mock_pipeline(tmp_path, "Safe"))
        assert sched.wait_all(timeout=10)
        rows = sched.snapshot()
        assert len(rows) == 2
        second = [r for r in rows if r.id != first][0]
        assert second.kind == "OfmcMultiSession"
        assert second.meta["sessions"] == 3
        assert second.console_id == rows[0].console_id  # continuation shares console
        assert second.outcome is not None and second.outcome.sessions == 3
    finally:
        sched.shutdown()


# -- events and snapshot -----------------------------------------------------


def test_event_stream_ordered_and_replayable(scheduler):
    scheduler.submit(TaskKind.GENERIC, _echo_plan("hello"))
    assert scheduler.wait_all(timeout=10)
    history = scheduler.events.history
    seqs = [e["seq"] for e in history]
    assert seqs == list(range(1, len(seqs) + 1))
    types = [e["type"] for e in history]
    assert types[0] == "task-enqueued"
    assert types[-1] == "task-terminal"
    assert "task-started" in types and "output-chunk" in types
    replay = scheduler.events.subscribe(replay=True)
    replayed = [replay.get_nowait() for _ in range(len(history))]
    assert replayed == history


def test_spawn_failure_is_tool_error(scheduler):
    task_id = scheduler.submit(TaskKind.GENERIC, CommandPlan("/nonexistent/binary"))
    assert scheduler.wait_all(timeout=10)
    task = scheduler.get_task(task_id)
    assert task is not None
    assert task.state is TaskState.FINISHED
    assert task.outcome is not None and task.outcome.verdict is Verdict.TOOL_ERROR


def test_snapshot_sorted_by_enqueue(scheduler):
    ids = [scheduler.submit(TaskKind.GENERIC, _echo_plan(f"x{i}")) for i in range(4)]
    assert scheduler.wait_all(timeout=10)
    assert [r.id for r in scheduler.snapshot()] == ids


# -- randomized stress -------------------------------------------------------


def test_thousand_task_stress_counters_balance():
    """1000 cheap tasks with random priorities, kills, and cap changes."""
    rng = random.Random(7)
    sched = Scheduler(SchedulerConfig(max_parallel=4))
    peak = 0
    stop = threading.Event()

    def probe():
        nonlocal peak
        while not stop.is_set():
            peak = max(peak, sched.running_count())
            time.sleep(0.001)

    watcher = threading.Thread(target=probe, daemon=True)
    watcher.start()
    try:
        kinds = list(TaskKind)
        ids = []
        for i in range(1000):
            ids.append(sched.submit(rng.choice(kinds), CommandPlan("/bin/true")))
            if i % 97 == 0 and ids:
                victim = rng.choice(ids)
                try:
                    sched.kill([victim])
                except KeyError:
                    pass
            if i % 211 == 0:
                sched.set_max_parallel(rng.randrange(1, 5))
        sched.set_max_parallel(4)
        assert sched.wait_all(timeout=60)
        stop.set()
        inc, dec = sched.counter_balance()
        assert inc == dec
        assert peak <= 4
        states = {r.state for r in sched.snapshot()}
        assert states <= {"Finished", "Killed"}
    finally:
        stop.set()
        sched.shutdown()
