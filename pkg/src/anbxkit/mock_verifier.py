"""Deterministic stand-in for the external verifiers, used by tests and the
``--tool mock`` CLI path.

A mock script is a small key=value file:

    delay_ms=200
    class=Safe
    all_delay_ms=1200
    goal2_class=Attack
    goal2_delay_ms=50
    exit_code=0

When invoked on a single-goal protocol file (``..._goal<i>`` name) the
``goal<i>_*`` overrides apply; otherwise the ``all_*``/top-level values do.
Output carries the same markers the real-tool rule sets match on, so
``classify_output`` recovers exactly the scripted class.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .classify import Verdict, goal_from_protocol_name

_MARKERS = {
    Verdict.SAFE: "NO_ATTACK_FOUND",
    Verdict.ATTACK: "ATTACK_FOUND",
    Verdict.INCONCLUSIVE: "INCONCLUSIVE",
}


@dataclass
class MockScript:
    delay_ms: int = 0
    verdict: Verdict = Verdict.SAFE
    all_delay_ms: Optional[int] = None
    exit_code: int = 0
    garbage: bool = False
    sessions: Optional[int] = None
    per_goal: dict[str, Verdict] = field(default_factory=dict)
    per_goal_delay: dict[str, int] = field(default_factory=dict)

    @classmethod
    def parse(cls, text: str) -> "MockScript":
        script = cls()
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key == "delay_ms":
                script.delay_ms = int(value)
            elif key == "all_delay_ms":
                script.all_delay_ms = int(value)
            elif key == "class":
                script.verdict = Verdict(value)
            elif key == "exit_code":
                script.exit_code = int(value)
            elif key == "garbage":
                script.garbage = value.lower() in ("1", "true", "yes")
            elif key == "sessions":
                script.sessions = int(value)
            elif key.endswith("_class"):
                script.per_goal[key[: -len("_class")]] = Verdict(value)
            elif key.endswith("_delay_ms"):
                script.per_goal_delay[key[: -len("_delay_ms")]] = int(value)
        return script

    @classmethod
    def load(cls, path: Path) -> "MockScript":
        return cls.parse(path.read_text(encoding="utf-8"))


def run_mock_verifier(script: MockScript, goal: Optional[str] = None, sleep=time.sleep) -> tuple[str, int]:
    """Produce (output text, exit code) after the scripted delay."""
    if goal is not None and goal in script.per_goal:
        verdict = script.per_goal[goal]
        delay = script.per_goal_delay.get(goal, script.delay_ms)
    elif goal is not None:
        verdict = script.verdict
        delay = script.delay_ms
    else:
        verdict = script.verdict
        delay = script.all_delay_ms if script.all_delay_ms is not None else script.delay_ms

    if delay:
        sleep(delay / 1000.0)

    if script.garbage:
        return "gurgle blip unparseable output\n", script.exit_code or 1

    lines = ["mock verifier"]
    if goal is not None:
        lines.append(f"GOAL {goal}")
    if script.sessions is not None:
        lines.append(f"SESSIONS {script.sessions}")
    lines.append(_MARKERS[verdict])
    return "\n".join(lines) + "\n", script.exit_code


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="anbxkit-mock-verifier")
    parser.add_argument("--script", required=True)
    parser.add_argument("protocol", nargs="?")
    args = parser.parse_args(argv)

    script = MockScript.load(Path(args.script))
    goal = None
    if args.protocol:
        goal = goal_from_protocol_name(Path(args.protocol).stem)
    text, code = run_mock_verifier(script, goal)
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
