"""Command-line entry point covering the whole workflow headlessly.

Exit codes: 0 success/safe, 1 diagnostics or attack found, 2 tool or
configuration error, 3 timeout.
"""

from __future__ import annotations

import sys
from datetime import datetime
from pathlib import Path
from typing import Optional

import click

from .classify import Verdict
from .config import WorkbenchConfig, default_config_path, load_config, save_config, validate_config
from .model import Severity, SourceFile
from .parser import parse
from .plans import log_path as build_log_path
from .plans import write_log
from .printer import pretty_print
from .results import bench_run, render_bench_table, render_bench_tsv, worst_verdict
from .scheduler import Scheduler, SchedulerConfig
from .semantics import validate
from .transform import split_goals
from .workbench import VerifyRequest, Workbench, WorkbenchError

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_TOOL_ERROR = 2
EXIT_TIMEOUT = 3

_COLORS = {"safe": "green", "attack": "red", "inconclusive": "yellow"}

STUB_PROTOCOL = """\
Protocol: {name}

Types:
  Agent A,B
  Number Msg
  Certified A,B

Knowledge:
  A: A,B
  B: A,B

Actions:
  A -> B,@(A|B|B): Msg

Goals:
  Msg secret between A,B
  B authenticates A on Msg
"""


def _use_color(cfg: WorkbenchConfig) -> bool:
    return cfg.console_colors and sys.stdout.isatty()


def _echo_verdict(text: str, verdict: Optional[Verdict], color: bool) -> None:
    if color and verdict is not None:
        css = {
            Verdict.SAFE: "green",
            Verdict.ATTACK: "red",
            Verdict.INCONCLUSIVE: "yellow",
            Verdict.TIMEOUT: "yellow",
            Verdict.TOOL_ERROR: "red",
        }[verdict]
        click.secho(text, fg=css)
    else:
        click.echo(text)


@click.group()
@click.option("--config-file", type=click.Path(path_type=Path), default=None, help="Configuration file location.")
@click.pass_context
def main(ctx: click.Context, config_file: Optional[Path]) -> None:
    """Alice & Bob protocol workbench."""
    ctx.ensure_object(dict)
    ctx.obj["config_path"] = config_file or default_config_path()
    ctx.obj["config"] = load_config(ctx.obj["config_path"])


@main.command()
@click.argument("name")
@click.option("--dir", "directory", type=click.Path(path_type=Path), default=Path("."), help="Target directory.")
def init(name: str, directory: Path) -> None:
    """Scaffold a project with a stub protocol."""
    directory.mkdir(parents=True, exist_ok=True)
    target = directory / f"{name}.AnBx"
    if target.exists():
        click.echo(f"refusing to overwrite {target}", err=True)
        sys.exit(EXIT_TOOL_ERROR)
    target.write_text(STUB_PROTOCOL.format(name=name), encoding="utf-8")
    click.echo(f"created {target}")


@main.command()
@click.argument("paths", nargs=-1, required=True, type=click.Path(exists=True, path_type=Path))
def fmt(paths: tuple[Path, ...]) -> None:
    """Rewrite protocol files to canonical formatting."""
    for path in paths:
        source = SourceFile.from_path(path)
        result = parse(source)
        if result.model is None:
            for d in result.diagnostics:
                click.echo(d.render(), err=True)
            sys.exit(EXIT_FINDINGS)
        formatted = pretty_print(result.model, source.dialect)
        if formatted != source.text:
            path.write_text(formatted, encoding="utf-8")
            click.echo(f"formatted {path}")
        else:
            click.echo(f"unchanged {path}")


@main.command()
@click.argument("paths", nargs=-1, required=True, type=click.Path(exists=True, path_type=Path))
@click.pass_context
def check(ctx: click.Context, paths: tuple[Path, ...]) -> None:
    """Parse and validate; print diagnostics."""
    any_findings = False
    for path in paths:
        source = SourceFile.from_path(path)
        result = parse(source)
        diagnostics = list(result.diagnostics)
        if result.model is not None:
            diagnostics += validate(result.model, source.dialect)
        diagnostics.sort(key=lambda d: (d.span.start, d.span.end, d.code))
        for d in diagnostics:
            click.echo(f"{path}: {d.render()}")
            for fix in d.fixes:
                click.echo(f"{path}:   fix: {fix.label}")
        if any(d.severity is Severity.ERROR for d in diagnostics):
            any_findings = True
    sys.exit(EXIT_FINDINGS if any_findings else EXIT_OK)


@main.command()
@click.argument("path", type=click.Path(exists=True, path_type=Path))
@click.option("--single-goals", is_flag=True, help="Emit one file per goal.")
@click.option("--out-dir", type=click.Path(path_type=Path), default=None)
@click.pass_context
def compile(ctx: click.Context, path: Path, single_goals: bool, out_dir: Optional[Path]) -> None:
    """Lower AnBx channel modes and emit AnB."""
    workbench = Workbench(ctx.obj["config"], workspace=path.parent)
    try:
        written = workbench.compile_to_anb(path, single_goals=single_goals, out_dir=out_dir)
    except WorkbenchError as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_FINDINGS if exc.code in ("E-PARSE", "E-VALIDATE") else EXIT_TOOL_ERROR)
    finally:
        workbench.close()
    for p in written:
        click.echo(str(p))


@main.command("split-goals")
@click.argument("path", type=click.Path(exists=True, path_type=Path))
@click.option("--out-dir", type=click.Path(path_type=Path), default=None)
def split_goals_cmd(path: Path, out_dir: Optional[Path]) -> None:
    """Write one single-goal copy of the protocol per goal."""
    source = SourceFile.from_path(path)
    result = parse(source)
    if result.model is None:
        for d in result.diagnostics:
            click.echo(d.render(), err=True)
        sys.exit(EXIT_FINDINGS)
    out_dir = out_dir or path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    for variant in split_goals(result.model):
        target = out_dir / f"{variant.name}{path.suffix}"
        target.write_text(pretty_print(variant, source.dialect), encoding="utf-8")
        click.echo(str(target))


@main.command()
@click.argument("path", type=click.Path(exists=True, path_type=Path))
@click.option("--tool", type=click.Choice(["ofmc", "proverif", "mock"]), default="ofmc")
@click.option("--sessions", type=int, default=1)
@click.option("--one-session-first", is_flag=True)
@click.option("--single-goals", is_flag=True)
@click.option("--via-if", is_flag=True)
@click.option("--timeout", "timeout_minutes", type=float, default=None, help="Global timeout in minutes.")
@click.option("--max-parallel", type=int, default=None)
@click.option("--mock-script", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--log-dir", type=click.Path(path_type=Path), default=None)
@click.pass_context
def verify(
    ctx: click.Context,
    path: Path,
    tool: str,
    sessions: int,
    one_session_first: bool,
    single_goals: bool,
    via_if: bool,
    timeout_minutes: Optional[float],
    max_parallel: Optional[int],
    mock_script: Optional[Path],
    log_dir: Optional[Path],
) -> None:
    """Run verification through the task scheduler and print per-goal results."""
    cfg: WorkbenchConfig = ctx.obj["config"]
    sched_cfg = SchedulerConfig(
        max_parallel=max_parallel if max_parallel is not None else cfg.max_parallel,
        timeout_minutes=timeout_minutes if timeout_minutes is not None else cfg.timeout_minutes,
    )
    scheduler = Scheduler(sched_cfg)
    workbench = Workbench(cfg, scheduler=scheduler, workspace=path.parent)
    color = _use_color(cfg)
    try:
        request = VerifyRequest(
            path=path,
            tool=tool,
            sessions=sessions,
            one_session_first=one_session_first,
            single_goals=single_goals,
            via_if=via_if,
            mock_script=mock_script,
        )
        workbench.verify(request)
        scheduler.wait_all()

        if log_dir is not None:
            started = datetime.now()
            for row in scheduler.snapshot():
                task = scheduler.get_task(row.id)
                if task is None:
                    continue
                target = build_log_path(str(log_dir), tool, row.meta.get("protocol", path.stem), None, started)
                write_log(target, row.command_line, started, task.captured_output())

        verdicts = []
        for protocol, goals in workbench.results.ordered_view():
            click.echo(protocol)
            for goal in goals:
                session_note = f" ({goal.sessions} sessions)" if goal.sessions else ""
                _echo_verdict(
                    f"  {goal.goal_label}: {goal.status.value}{session_note}",
                    goal.status,
                    color,
                )
                verdicts.append(goal.status)
        worst = worst_verdict(verdicts)
        sys.exit(
            {
                Verdict.SAFE: EXIT_OK,
                Verdict.ATTACK: EXIT_FINDINGS,
                Verdict.TOOL_ERROR: EXIT_TOOL_ERROR,
                Verdict.INCONCLUSIVE: EXIT_TOOL_ERROR,
                Verdict.TIMEOUT: EXIT_TIMEOUT,
            }[worst]
        )
    except WorkbenchError as exc:
        click.echo(f"{exc.code}: {exc}", err=True)
        sys.exit(EXIT_TOOL_ERROR)
    finally:
        workbench.close()


@main.command()
@click.argument("paths", nargs=-1, required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--tool", type=click.Choice(["ofmc", "proverif", "mock"]), default="mock")
@click.option("--reps", type=int, default=1)
@click.option("--mock-script", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--max-parallel", type=int, default=None)
@click.option("--tsv", is_flag=True, help="Machine-readable output.")
@click.pass_context
def bench(
    ctx: click.Context,
    paths: tuple[Path, ...],
    tool: str,
    reps: int,
    mock_script: Optional[Path],
    max_parallel: Optional[int],
    tsv: bool,
) -> None:
    """Compare all-goals vs parallel single-goals verification wall time."""
    cfg: WorkbenchConfig = ctx.obj["config"]
    sched_cfg = SchedulerConfig(max_parallel=max_parallel if max_parallel is not None else cfg.max_parallel)
    scheduler = Scheduler(sched_cfg)
    workbench = Workbench(cfg, scheduler=scheduler, workspace=paths[0].parent)
    try:
        rows = bench_run(
            list(paths),
            tool,
            reps,
            run_all=lambda p: _bench_pass(workbench, p, tool, mock_script, single_goals=False),
            run_single=lambda p: _bench_pass(workbench, p, tool, mock_script, single_goals=True),
            goal_counter=_goal_count,
        )
    finally:
        workbench.close()
    click.echo(render_bench_tsv(rows) if tsv else render_bench_table(rows), nl=False)


def _goal_count(path: Path) -> int:
    result = parse(SourceFile.from_path(path))
    return len(result.model.goals) if result.model else 0


def _bench_pass(workbench: Workbench, path: Path, tool: str, mock_script: Optional[Path], single_goals: bool):
    workbench.results.clear()
    request = VerifyRequest(
        path=path,
        tool=tool,
        single_goals=single_goals,
        mock_script=mock_script,
    )
    workbench.verify(request)
    workbench.scheduler.wait_all()
    return [g.status for _, goals in workbench.results.ordered_view() for g in goals]


@main.command()
@click.argument("path", type=click.Path(exists=True, path_type=Path))
@click.pass_context
def reconstruct(ctx: click.Context, path: Path) -> None:
    """Export to AnB, verify, and on attack re-run the compiler on the trace."""
    workbench = Workbench(ctx.obj["config"], workspace=path.parent)
    try:
        workbench.reconstruct(path)
        workbench.scheduler.wait_all()
        worst = workbench.worst_verdict()
        sys.exit(EXIT_FINDINGS if worst is Verdict.ATTACK else EXIT_OK)
    except WorkbenchError as exc:
        click.echo(f"{exc.code}: {exc}", err=True)
        sys.exit(EXIT_TOOL_ERROR)
    finally:
        workbench.close()


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8770)
@click.option("--workspace", type=click.Path(exists=True, path_type=Path), default=Path("."))
@click.option("--static-dir", type=click.Path(path_type=Path), default=None)
@click.pass_context
def serve(ctx: click.Context, host: str, port: int, workspace: Path, static_dir: Optional[Path]) -> None:
    """Start the local workbench service (loopback only)."""
    from .service import serve as run_service

    workbench = Workbench(ctx.obj["config"], workspace=workspace)
    if static_dir is None:
        candidate = Path(__file__).resolve().parents[3] / "frontend" / "dist"
        static_dir = candidate if candidate.is_dir() else None
    try:
        run_service(workbench, host=host, port=port, static_dir=static_dir)
    except WorkbenchError as exc:
        click.echo(f"{exc.code}: {exc}", err=True)
        sys.exit(EXIT_TOOL_ERROR)
    finally:
        workbench.close()


@main.command("config")
@click.option("--set", "assignments", multiple=True, help="key=value assignment to persist.")
@click.pass_context
def config_cmd(ctx: click.Context, assignments: tuple[str, ...]) -> None:
    """Validate and print the configuration."""
    cfg: WorkbenchConfig = ctx.obj["config"]
    if assignments:
        record = cfg.to_record()
        for item in assignments:
            key, _, value = item.partition("=")
            record[key] = value
        cfg = WorkbenchConfig.from_record(record)
        save_config(cfg, ctx.obj["config_path"])
    for key, value in cfg.to_record().items():
        click.echo(f"{key}={value if value is not None else ''}")
    issues = validate_config(cfg)
    for issue in issues:
        click.echo(f"issue {issue.code} {issue.path}", err=True)
    sys.exit(EXIT_TOOL_ERROR if issues else EXIT_OK)


if __name__ == "__main__":
    main()
