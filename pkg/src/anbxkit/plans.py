"""Command plans and pipelines for the external tools.

Plans are pure data: an argv vector plus working directory and environment,
executed without a shell. Conditional pipelines chain plans with a predicate
on the previous step's outcome.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Callable, Optional

from .classify import OutcomeClass, Verdict


class PlanError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class CommandPlan:
    executable: str
    args: tuple[str, ...] = ()
    working_dir: Optional[str] = None
    env: tuple[tuple[str, str], ...] = ()
    stdin_data: Optional[bytes] = None

    def argv(self) -> list[str]:
        return [self.executable, *self.args]

    def command_line(self) -> str:
        return " ".join(self.argv())

    def encode(self) -> str:
        parts = [self.executable, *self.args]
        line = "\t".join(parts)
        wd = self.working_dir or ""
        env = ";".join(f"{k}={v}" for k, v in self.env)
        return f"{line}\n{wd}\n{env}\n"

    @classmethod
    def decode(cls, text: str) -> "CommandPlan":
        line, wd, env = text.split("\n")[:3]
        parts = line.split("\t")
        env_pairs = tuple(tuple(p.split("=", 1)) for p in env.split(";") if p)
        return cls(parts[0], tuple(parts[1:]), wd or None, env_pairs)  # type: ignore[arg-type]


@dataclass
class PipelineStep:
    kind: str  # task kind name, see scheduler.TaskKind
    tool: str
    plan: CommandPlan
    when: Optional[Callable[[Optional[OutcomeClass]], bool]] = None
    meta: dict = field(default_factory=dict)


@dataclass
class ConditionalPipeline:
    steps: list[PipelineStep]


def _require_executable(path: Optional[str], tool: str) -> str:
    if not path:
        raise PlanError("E-CONFIG", f"no executable configured for {tool}")
    p = Path(path)
    if not p.exists() or not p.is_file():
        raise PlanError("E-CONFIG", f"{tool} executable not found: {path}")
    return str(p)


def build_ofmc_invocation(
    ofmc_path: str,
    protocol_path: str,
    sessions: int = 1,
    via_if: bool = False,
    theory_path: Optional[str] = None,
) -> list[CommandPlan]:
    """One plan, or a generate-then-verify pair when ``via_if`` is set."""
    exe = _require_executable(ofmc_path, "ofmc")
    extra: tuple[str, ...] = ("--theory", theory_path) if theory_path else ()
    if not via_if:
        return [CommandPlan(exe, (protocol_path, "--numSess", str(sessions)) + extra)]
    if_path = str(Path(protocol_path).with_suffix(".if"))
    return [
        CommandPlan(exe, (protocol_path, "--IF", if_path) + extra),
        CommandPlan(exe, (if_path, "--numSess", str(sessions)) + extra),
    ]


def build_proverif_invocation(proverif_path: str, pv_path: str, mode: str = "pitype") -> CommandPlan:
    if mode not in ("pitype", "solve"):
        raise PlanError("E-CONFIG", f"unknown ProVerif mode {mode!r}")
    exe = _require_executable(proverif_path, "proverif")
    return CommandPlan(exe, ("-in", mode, pv_path))


def plan_one_session_first(
    ofmc_path: str,
    protocol_path: str,
    n: int,
    via_if: bool = False,
    meta: Optional[dict] = None,
) -> ConditionalPipeline:
    """Verify with one session; escalate to ``n`` sessions only when safe."""
    if n < 2:
        raise PlanError("E-BADN", f"one-session-first requires n >= 2, got {n}")
    meta = dict(meta or {})
    step1_plans = build_ofmc_invocation(ofmc_path, protocol_path, sessions=1, via_if=via_if)
    steps = [
        PipelineStep("OfmcOneSession", "ofmc", plan, meta={**meta, "sessions": 1})
        for plan in step1_plans
    ]
    step2 = build_ofmc_invocation(ofmc_path, protocol_path, sessions=n, via_if=via_if)[-1]
    steps.append(
        PipelineStep(
            "OfmcMultiSession",
            "ofmc",
            step2,
            when=lambda outcome: outcome is not None and outcome.verdict is Verdict.SAFE,
            meta={**meta, "sessions": n},
        )
    )
    return ConditionalPipeline(steps)


def plan_attack_reconstruction(
    anbxc_path: str,
    ofmc_path: str,
    anbx_path: str,
    meta: Optional[dict] = None,
) -> ConditionalPipeline:
    """Export to AnB, verify with OFMC, and on an attack re-run the compiler
    with the captured trace for interpretation."""
    compiler = _require_executable(anbxc_path, "anbxc")
    ofmc = _require_executable(ofmc_path, "ofmc")
    meta = dict(meta or {})
    anb_path = str(Path(anbx_path).with_suffix(".AnB"))
    trace_path = str(Path(anbx_path).with_suffix(".trace"))
    return ConditionalPipeline(
        [
            PipelineStep("Compile", "anbxc", CommandPlan(compiler, (anbx_path, "-out:AnB", "-o", anb_path)), meta=meta),
            PipelineStep("OfmcOneSession", "ofmc", CommandPlan(ofmc, (anb_path, "--numSess", "1")), meta=meta),
            PipelineStep(
                "Compile",
                "anbxc",
                CommandPlan(compiler, (anbx_path, "-trace", trace_path)),
                when=lambda outcome: outcome is not None and outcome.verdict is Verdict.ATTACK,
                meta=meta,
            ),
        ]
    )


def docker_run_plan(last_build_file: str, current_build_file: str) -> list[CommandPlan]:
    """The fixed four-command container lifecycle: stop the previous project,
    prune containers and networks, start the current one."""
    return [
        CommandPlan("docker", ("compose", "-f", last_build_file, "down")),
        CommandPlan("docker", ("container", "prune", "--force")),
        CommandPlan("docker", ("network", "prune", "--force")),
        CommandPlan("docker", ("compose", "-f", current_build_file, "up")),
    ]


_SANITIZE = re.compile(r"[^A-Za-z0-9._-]+")


def log_path(
    root: str,
    tool: str,
    protocol_name: str,
    export_option: Optional[str] = None,
    timestamp: Optional[datetime] = None,
) -> Path:
    """Deterministic log file location, one folder per tool.

    ``<root>/<tool>/<protocol>[_<export>]_<YYYYMMDD-HHMMSS>.log``; a second
    call in the same second gets a ``-2`` (then ``-3`` ...) disambiguator.
    """
    ts = (timestamp or datetime.now()).strftime("%Y%m%d-%H%M%S")
    stem = _SANITIZE.sub("_", protocol_name)
    if export_option:
        stem = f"{stem}_{_SANITIZE.sub('_', export_option)}"
    folder = Path(root) / _SANITIZE.sub("_", tool)
    candidate = folder / f"{stem}_{ts}.log"
    counter = 2
    while candidate.exists():
        candidate = folder / f"{stem}_{ts}-{counter}.log"
        counter += 1
    return candidate


def write_log(
    path: Path,
    command_line: str,
    started_at: datetime,
    output: str,
    tool_version: str = "unknown",
) -> None:
    """Raw captured output behind a 3-line header."""
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        header = (
            f"command: {command_line}\n"
            f"started: {started_at.isoformat(timespec='seconds')}\n"
            f"version: {tool_version}\n"
        )
        path.write_text(header + output, encoding="utf-8")
    except OSError as exc:
        raise PlanError("E-IO", f"cannot write log {path}: {exc}") from exc


def probe_version(executable: str) -> str:
    """Local ``--version`` capture; remote update checks are out of scope."""
    import subprocess

    try:
        proc = subprocess.run(
            [executable, "--version"],
            capture_output=True,
            text=True,
            timeout=10,
        )
    except (OSError, subprocess.TimeoutExpired):
        return "unknown"
    out = (proc.stdout or proc.stderr).strip().splitlines()
    return out[0] if out else "unknown"
