"""Workbench configuration: tool paths, limits, and filesystem checks.

Persists as a human-editable key=value file; the default location can be
overridden with the ``ANBX_WORKBENCH_CONFIG`` environment variable.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

ENV_CONFIG_PATH = "ANBX_WORKBENCH_CONFIG"


@dataclass
class WorkbenchConfig:
    anbxc_path: Optional[str] = None
    ofmc_path: Optional[str] = None
    proverif_path: Optional[str] = None
    anbxc_config_path: Optional[str] = None
    log_root: Optional[str] = None
    permission_checks: bool = True
    console_colors: bool = True
    max_parallel: int = 0
    timeout_minutes: float = 0.0

    def to_record(self) -> dict:
        return {
            "anbxcPath": self.anbxc_path,
            "ofmcPath": self.ofmc_path,
            "proverifPath": self.proverif_path,
            "anbxcConfigPath": self.anbxc_config_path,
            "logRoot": self.log_root,
            "permissionChecks": self.permission_checks,
            "consoleColors": self.console_colors,
            "maxParallel": self.max_parallel,
            "timeoutMinutes": self.timeout_minutes,
        }

    @classmethod
    def from_record(cls, record: dict) -> "WorkbenchConfig":
        return cls(
            anbxc_path=record.get("anbxcPath"),
            ofmc_path=record.get("ofmcPath"),
            proverif_path=record.get("proverifPath"),
            anbxc_config_path=record.get("anbxcConfigPath"),
            log_root=record.get("logRoot"),
            permission_checks=bool(record.get("permissionChecks", True)),
            console_colors=bool(record.get("consoleColors", True)),
            max_parallel=int(record.get("maxParallel", 0)),
            timeout_minutes=float(record.get("timeoutMinutes", 0.0)),
        )

    def tool_path(self, tool: str) -> Optional[str]:
        return {"anbxc": self.anbxc_path, "ofmc": self.ofmc_path, "proverif": self.proverif_path}.get(tool)


@dataclass(frozen=True)
class ConfigIssue:
    code: str
    path: str
    required_permissions: str = ""


def _permission_issues(path: Path, need_read: bool, need_write: bool, need_exec: bool) -> list[ConfigIssue]:
    issues = []
    if need_read and not os.access(path, os.R_OK):
        issues.append(ConfigIssue("E-PERM-READ", str(path), "r"))
    if need_write and not os.access(path, os.W_OK):
        issues.append(ConfigIssue("E-PERM-WRITE", str(path), "w"))
    if need_exec and not os.access(path, os.X_OK):
        issues.append(ConfigIssue("E-PERM-EXEC", str(path), "x"))
    return issues


def validate_config(cfg: WorkbenchConfig) -> list[ConfigIssue]:
    """Existence, type, and permission checks for every configured path.

    Executables need read+execute, config files read+write, and directories
    read+write+execute for traversal. ``permission_checks=False`` suppresses
    permission issues but never existence or type issues.
    """
    issues: list[ConfigIssue] = []

    def check(raw: Optional[str], kind: str, perms: tuple[bool, bool, bool]) -> None:
        if not raw:
            return
        path = Path(raw)
        if not path.exists():
            issues.append(ConfigIssue("E-PATH-MISSING", raw))
            return
        if kind == "file" and not path.is_file():
            issues.append(ConfigIssue("E-PATH-TYPE", raw))
            return
        if kind == "dir" and not path.is_dir():
            issues.append(ConfigIssue("E-PATH-TYPE", raw))
            return
        if cfg.permission_checks:
            issues.extend(_permission_issues(path, *perms))

    check(cfg.anbxc_path, "file", (True, False, True))
    check(cfg.ofmc_path, "file", (True, False, True))
    check(cfg.proverif_path, "file", (True, False, True))
    check(cfg.anbxc_config_path, "file", (True, True, False))
    check(cfg.log_root, "dir", (True, True, True))
    return issues


def default_config_path() -> Path:
    override = os.environ.get(ENV_CONFIG_PATH)
    if override:
        return Path(override)
    base = os.environ.get("XDG_CONFIG_HOME") or str(Path.home() / ".config")
    return Path(base) / "anbxkit" / "workbench.conf"


_KEY_MAP = {f.name: f for f in fields(WorkbenchConfig)}


def save_config(cfg: WorkbenchConfig, path: Optional[Path] = None) -> Path:
    path = path or default_config_path()
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    for f in fields(WorkbenchConfig):
        value = getattr(cfg, f.name)
        if value is None:
            continue
        lines.append(f"{f.name}={value}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def load_config(path: Optional[Path] = None) -> WorkbenchConfig:
    path = path or default_config_path()
    cfg = WorkbenchConfig()
    if not path.exists():
        return cfg
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#") or "=" not in line:
            continue
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        f = _KEY_MAP.get(key)
        if f is None:
            continue
        if f.type in ("bool", bool):
            setattr(cfg, key, value.lower() in ("1", "true", "yes"))
        elif f.type in ("int", int):
            setattr(cfg, key, int(value))
        elif f.type in ("float", float):
            setattr(cfg, key, float(value))
        else:
            setattr(cfg, key, value or None)
    return cfg
