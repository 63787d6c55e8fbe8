"""Local HTTP + event-stream API for the dashboard and other clients.

Binds loopback only; all mutation is delegated to the scheduler and
aggregator through their thread-safe entry points. The event stream is
server-sent events carrying the scheduler's ordered event log.
"""

from __future__ import annotations

import json
import queue
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.responses import StreamingResponse
from fastapi.staticfiles import StaticFiles

from .config import WorkbenchConfig, save_config, validate_config
from .workbench import VerifyRequest, Workbench, WorkbenchError

HELP_LINKS = {
    "ofmc": "https://www.imm.dtu.dk/~samo/",
    "proverif": "https://bblanche.gitlabpages.inria.fr/proverif/",
    "anbxc": "https://www.dais.unive.it/~modesti/anbx/",
}


def create_app(workbench: Workbench, static_dir: Optional[Path] = None) -> FastAPI:
    app = FastAPI(title="anbxkit workbench", docs_url=None, redoc_url=None)
    app.state.workbench = workbench

    @app.get("/api/protocols")
    def protocols() -> dict:
        return {"protocols": workbench.list_protocols()}

    @app.post("/api/check")
    def check(body: dict) -> dict:
        path = Path(body["path"])
        if not path.exists():
            raise HTTPException(status_code=404, detail=f"no such file: {path}")
        diagnostics = workbench.check(path)
        return {"diagnostics": [d.to_record() for d in diagnostics]}

    @app.post("/api/compile")
    def compile_endpoint(body: dict) -> dict:
        path = Path(body["path"])
        target = body.get("target", "anb")
        single_goals = bool(body.get("singleGoals", False))
        if target != "anb":
            raise HTTPException(status_code=400, detail="only target 'anb' compiles in-process")
        try:
            written = workbench.compile_to_anb(path, single_goals=single_goals)
        except WorkbenchError as exc:
            raise HTTPException(status_code=422, detail={"code": exc.code, "message": str(exc)})
        return {"written": [str(p) for p in written]}

    @app.post("/api/verify")
    def verify(body: dict) -> dict:
        request = VerifyRequest(
            path=Path(body["path"]),
            tool=body.get("tool", "ofmc"),
            sessions=int(body.get("sessions", 1)),
            one_session_first=bool(body.get("oneSessionFirst", False)),
            single_goals=bool(body.get("singleGoals", False)),
            via_if=bool(body.get("viaIF", False)),
            new_console=bool(body.get("newConsole", True)),
            mock_script=Path(body["mockScript"]) if body.get("mockScript") else None,
        )
        try:
            return workbench.verify(request)
        except WorkbenchError as exc:
            raise HTTPException(status_code=422, detail={"code": exc.code, "message": str(exc)})

    @app.get("/api/tasks")
    def tasks() -> dict:
        rows = []
        for row in workbench.scheduler.snapshot():
            rows.append(
                {
                    "id": row.id,
                    "kind": row.kind,
                    "priority": row.priority,
                    "state": row.state,
                    "consoleId": row.console_id,
                    "waiting": row.waiting,
                    "runtime": row.runtime,
                    "commandLine": row.command_line,
                    "outcome": row.outcome.to_record() if row.outcome else None,
                    "meta": row.meta,
                }
            )
        return {"tasks": rows}

    @app.post("/api/tasks/{task_id}/kill")
    def kill(task_id: int) -> dict:
        try:
            workbench.scheduler.kill([task_id])
        except KeyError:
            raise HTTPException(status_code=404, detail={"code": "E-NOTASK", "taskId": task_id})
        return {"killed": task_id}

    @app.get("/api/results")
    def results(alphabetical: bool = False) -> dict:
        return {"results": workbench.results.to_records(alphabetical)}

    @app.get("/api/config")
    def get_config() -> dict:
        record = workbench.config.to_record()
        record["issues"] = [
            {"code": i.code, "path": i.path, "requiredPermissions": i.required_permissions}
            for i in validate_config(workbench.config)
        ]
        record["helpLinks"] = HELP_LINKS
        return record

    @app.put("/api/config")
    def put_config(body: dict) -> dict:
        cfg = WorkbenchConfig.from_record({**workbench.config.to_record(), **body})
        workbench.config = cfg
        save_config(cfg)
        return cfg.to_record()

    @app.get("/api/consoles/{console_id}")
    def console(console_id: int) -> dict:
        return {"consoleId": console_id, "chunks": workbench.consoles.chunks(console_id)}

    @app.get("/api/events")
    def events() -> StreamingResponse:
        q = workbench.scheduler.events.subscribe(replay=True)

        def stream():
            try:
                while True:
                    try:
                        event = q.get(timeout=15.0)
                    except queue.Empty:
                        yield ": keep-alive\n\n"
                        continue
                    yield f"data: {json.dumps(event)}\n\n"
            finally:
                workbench.scheduler.events.unsubscribe(q)

        return StreamingResponse(stream(), media_type="text/event-stream")

    if static_dir and static_dir.is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="dashboard")

    return app


def serve(workbench: Workbench, host: str = "127.0.0.1", port: int = 8770, static_dir: Optional[Path] = None) -> None:
    import uvicorn

    app = create_app(workbench, static_dir=static_dir)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except OSError as exc:
        raise WorkbenchError("E-BIND", f"cannot bind {host}:{port}: {exc}") from exc
