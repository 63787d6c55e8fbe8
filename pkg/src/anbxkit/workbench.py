"""Ties the pieces together: one workbench owns a scheduler, a result tree,
console capture, and the verify/compile workflows that both the CLI and the
HTTP service drive."""

from __future__ import annotations

import sys
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .classify import Verdict
from .config import WorkbenchConfig, validate_config
from .model import Dialect, Diagnostic, SourceFile
from .parser import parse
from .plans import (
    CommandPlan,
    ConditionalPipeline,
    PipelineStep,
    PlanError,
    build_ofmc_invocation,
    build_proverif_invocation,
    plan_attack_reconstruction,
    plan_one_session_first,
)
from .printer import pretty_print
from .results import ResultTree
from .scheduler import Scheduler, SchedulerConfig, TaskKind
from .semantics import validate
from .transform import compile_channels, split_goals


class WorkbenchError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class ConsoleStore:
    """Ordered captured output per console, fed by scheduler events."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._chunks: dict[int, list[dict]] = {}

    def feed(self, event: dict) -> None:
        if event.get("type") != "output-chunk":
            return
        with self._lock:
            self._chunks.setdefault(event["consoleId"], []).append(
                {"taskId": event["taskId"], "text": event["text"], "spans": event["spans"]}
            )

    def chunks(self, console_id: int) -> list[dict]:
        with self._lock:
            return list(self._chunks.get(console_id, []))

    def console_ids(self) -> list[int]:
        with self._lock:
            return sorted(self._chunks)


@dataclass
class VerifyRequest:
    path: Path
    tool: str = "ofmc"
    sessions: int = 1
    one_session_first: bool = False
    single_goals: bool = False
    via_if: bool = False
    new_console: bool = True
    mock_script: Optional[Path] = None
    proverif_mode: str = "pitype"


class Workbench:
    def __init__(
        self,
        config: Optional[WorkbenchConfig] = None,
        scheduler: Optional[Scheduler] = None,
        workspace: Optional[Path] = None,
    ) -> None:
        self.config = config or WorkbenchConfig()
        self.workspace = Path(workspace) if workspace else Path.cwd()
        if scheduler is None:
            scheduler = Scheduler(
                SchedulerConfig(
                    max_parallel=self.config.max_parallel,
                    timeout_minutes=self.config.timeout_minutes,
                )
            )
        self.scheduler = scheduler
        self.results = ResultTree()
        self.consoles = ConsoleStore()
        self._events = self.scheduler.events.subscribe()
        self._pump = threading.Thread(target=self._pump_events, daemon=True)
        self._pump.start()

    def _pump_events(self) -> None:
        while True:
            event = self._events.get()
            if event is None:
                return
            self.consoles.feed(event)
            self.results.ingest_event(event)

    def close(self) -> None:
        self.scheduler.shutdown()
        self._events.put(None)

    # -- protocol discovery and checking ------------------------------------

    def list_protocols(self) -> list[dict]:
        found = []
        for pattern in ("*.AnBx", "*.AnB", "*.anbx", "*.anb"):
            for path in sorted(self.workspace.rglob(pattern)):
                found.append(
                    {
                        "name": path.stem,
                        "path": str(path),
                        "dialect": Dialect.ANBX.value if path.suffix.lower() == ".anbx" else Dialect.ANB.value,
                    }
                )
        seen = set()
        unique = []
        for p in found:
            if p["path"] not in seen:
                seen.add(p["path"])
                unique.append(p)
        return unique

    def check(self, path: Path) -> list[Diagnostic]:
        source = SourceFile.from_path(path)
        result = parse(source)
        if result.model is None:
            return result.diagnostics
        return result.diagnostics + validate(result.model, source.dialect)

    # -- compilation --------------------------------------------------------

    def compile_to_anb(self, path: Path, single_goals: bool = False, out_dir: Optional[Path] = None) -> list[Path]:
        """In-process AnBx -> AnB lowering; optionally one file per goal."""
        source = SourceFile.from_path(path)
        result = parse(source)
        if result.model is None:
            raise WorkbenchError("E-PARSE", _render_all(result.diagnostics))
        diagnostics = validate(result.model, source.dialect)
        from .model import has_errors

        if has_errors(diagnostics):
            raise WorkbenchError("E-VALIDATE", _render_all(diagnostics))
        model = result.model
        if source.dialect is Dialect.ANBX:
            model = compile_channels(model)
        out_dir = out_dir or path.parent
        out_dir.mkdir(parents=True, exist_ok=True)
        written: list[Path] = []
        if single_goals:
            for variant in split_goals(model):
                target = out_dir / f"{variant.name}.AnB"
                target.write_text(pretty_print(variant, Dialect.ANB), encoding="utf-8")
                written.append(target)
        else:
            target = out_dir / f"{model.name}.AnB"
            target.write_text(pretty_print(model, Dialect.ANB), encoding="utf-8")
            written.append(target)
        return written

    # -- verification -------------------------------------------------------

    def verify(self, request: VerifyRequest) -> dict:
        """Plan and enqueue verification tasks; returns task ids + console."""
        issues = [i for i in validate_config(self.config) if i.code in ("E-PATH-MISSING", "E-PATH-TYPE")]
        relevant = {self.config.tool_path(request.tool)}
        blocking = [i for i in issues if i.path in relevant]
        if blocking:
            raise WorkbenchError("E-CONFIG", f"invalid tool path: {blocking[0].path}")

        console_id = self.scheduler.new_console() if request.new_console else 1

        targets: list[tuple[Path, Optional[str]]] = []
        path = request.path
        if request.single_goals:
            files = self.compile_to_anb(path, single_goals=True) if path.suffix.lower() in (".anbx", ".anb") else []
            for f in files:
                goal = f.stem.rsplit("_", 1)[-1]
                targets.append((f, goal))
        else:
            if path.suffix.lower() == ".anbx":
                path = self.compile_to_anb(path, single_goals=False)[0]
            targets.append((path, None))

        protocol_name = request.path.stem
        task_ids: list[int] = []
        for target, goal in targets:
            meta = {
                "protocol": protocol_name,
                "goal": goal,
                "tool": request.tool,
                "sessions": request.sessions,
            }
            pipeline = self._build_pipeline(request, target, meta)
            first = pipeline.steps[0]
            task_ids.append(
                self.scheduler.submit(
                    TaskKind(first.kind),
                    first.plan,
                    tool=first.tool,
                    console_id=console_id,
                    meta=first.meta,
                    pipeline=pipeline if len(pipeline.steps) > 1 else None,
                )
            )
        return {"taskIds": task_ids, "consoleId": console_id}

    def _build_pipeline(self, request: VerifyRequest, target: Path, meta: dict) -> ConditionalPipeline:
        tool = request.tool
        if tool == "mock":
            if request.mock_script is None:
                raise WorkbenchError("E-CONFIG", "mock verification requires a mock script")
            plan = CommandPlan(
                sys.executable,
                ("-m", "anbxkit.mock_verifier", "--script", str(request.mock_script), str(target)),
            )
            return ConditionalPipeline([PipelineStep("Generic", "mock", plan, meta=meta)])
        try:
            if tool == "ofmc":
                if request.one_session_first and request.sessions >= 2:
                    return plan_one_session_first(
                        self.config.ofmc_path or "",
                        str(target),
                        request.sessions,
                        via_if=request.via_if,
                        meta=meta,
                    )
                plans = build_ofmc_invocation(
                    self.config.ofmc_path or "",
                    str(target),
                    sessions=request.sessions,
                    via_if=request.via_if,
                )
                kind = "OfmcOneSession" if request.sessions <= 1 else "OfmcMultiSession"
                return ConditionalPipeline([PipelineStep(kind, "ofmc", p, meta=meta) for p in plans])
            if tool == "proverif":
                plan = build_proverif_invocation(
                    self.config.proverif_path or "", str(target), request.proverif_mode
                )
                return ConditionalPipeline([PipelineStep("ProVerif", "proverif", plan, meta=meta)])
        except PlanError as exc:
            raise WorkbenchError(exc.code, str(exc)) from exc
        raise WorkbenchError("E-CONFIG", f"unknown tool {tool!r}")

    def reconstruct(self, path: Path) -> dict:
        try:
            pipeline = plan_attack_reconstruction(
                self.config.anbxc_path or "",
                self.config.ofmc_path or "",
                str(path),
                meta={"protocol": path.stem, "tool": "ofmc"},
            )
        except PlanError as exc:
            raise WorkbenchError(exc.code, str(exc)) from exc
        task_id = self.scheduler.submit_pipeline(pipeline)
        return {"taskIds": [task_id]}

    def worst_verdict(self) -> Verdict:
        from .results import worst_verdict

        verdicts = [
            g.status for _, goals in self.results.ordered_view() for g in goals
        ]
        return worst_verdict(verdicts)


def _render_all(diagnostics) -> str:
    return "\n".join(d.render() for d in diagnostics)
