"""Classification of verifier console output into verdicts.

Each tool has an ordered rule set of regular expressions; the first match
wins. Timeout is never assigned here -- that verdict belongs to the
scheduler's kill path.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional


import enum


class Verdict(enum.Enum):
    SAFE = "Safe"
    ATTACK = "Attack"
    INCONCLUSIVE = "Inconclusive"
    TIMEOUT = "Timeout"
    TOOL_ERROR = "ToolError"


@dataclass(frozen=True)
class OutcomeClass:
    verdict: Verdict
    goal_name: Optional[str] = None
    sessions: Optional[int] = None
    excerpt: str = ""

    def to_record(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "goalName": self.goal_name,
            "sessions": self.sessions,
            "excerpt": self.excerpt,
        }


@dataclass(frozen=True)
class ClassifierRule:
    pattern: re.Pattern
    verdict: Verdict


@dataclass(frozen=True)
class ClassifierRuleSet:
    rules: tuple[ClassifierRule, ...]
    #: Verdict for clean exit with no rule match.
    default_on_success: Verdict = Verdict.INCONCLUSIVE


def _rules(*pairs: tuple[str, Verdict]) -> tuple[ClassifierRule, ...]:
    return tuple(ClassifierRule(re.compile(p, re.MULTILINE), v) for p, v in pairs)


#: Markers captured from real tool runs; override per version via load_rule_set.
DEFAULT_RULE_SETS: dict[str, ClassifierRuleSet] = {
    "ofmc": ClassifierRuleSet(
        _rules(
            (r"NO_ATTACK_FOUND", Verdict.SAFE),
            (r"ATTACK_FOUND", Verdict.ATTACK),
            (r"TIME ?OUT|Inconclusive", Verdict.INCONCLUSIVE),
        )
    ),
    "proverif": ClassifierRuleSet(
        _rules(
            (r"RESULT .* cannot be proved", Verdict.INCONCLUSIVE),
            (r"RESULT .* is true", Verdict.SAFE),
            (r"RESULT .* is false", Verdict.ATTACK),
        )
    ),
    "mock": ClassifierRuleSet(
        _rules(
            (r"NO_ATTACK_FOUND", Verdict.SAFE),
            (r"ATTACK_FOUND", Verdict.ATTACK),
            (r"INCONCLUSIVE", Verdict.INCONCLUSIVE),
        )
    ),
    "anbxc": ClassifierRuleSet(
        _rules((r"(?i)^error", Verdict.TOOL_ERROR)),
        default_on_success=Verdict.SAFE,
    ),
    "docker": ClassifierRuleSet(_rules(), default_on_success=Verdict.SAFE),
    "generic": ClassifierRuleSet(_rules(), default_on_success=Verdict.SAFE),
}

_GOAL_MARKER = re.compile(r"^GOAL (\S+)", re.MULTILINE)
_SESSIONS_MARKER = re.compile(r"^SESSIONS (\d+)", re.MULTILINE)
_GOAL_SUFFIX = re.compile(r"_goal(\d+)$")


def load_rule_set(path: Path, default_on_success: Verdict = Verdict.INCONCLUSIVE) -> ClassifierRuleSet:
    """Read rules from a text file: one ``verdict<TAB>regex`` per line."""
    rules: list[ClassifierRule] = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        verdict_name, _, pattern = line.partition("\t")
        verdict = Verdict(verdict_name)
        if verdict is Verdict.TIMEOUT:
            raise ValueError("Timeout cannot be assigned by a classifier rule")
        rules.append(ClassifierRule(re.compile(pattern, re.MULTILINE), verdict))
    return ClassifierRuleSet(tuple(rules), default_on_success)


def goal_from_protocol_name(name: str) -> Optional[str]:
    m = _GOAL_SUFFIX.search(name)
    return f"goal{m.group(1)}" if m else None


def classify_output(
    tool: str,
    text: str,
    exit_code: int,
    rule_sets: Optional[dict[str, ClassifierRuleSet]] = None,
    protocol_name: Optional[str] = None,
) -> OutcomeClass:
    """First-match-wins classification; total on any input.

    An unmatched nonzero exit is a ToolError; an unmatched clean exit falls
    back to the rule set's success default.
    """
    rule_set = (rule_sets or DEFAULT_RULE_SETS).get(tool) or DEFAULT_RULE_SETS["generic"]

    goal = None
    m = _GOAL_MARKER.search(text)
    if m:
        goal = m.group(1)
    elif protocol_name:
        goal = goal_from_protocol_name(protocol_name)

    sessions = None
    m = _SESSIONS_MARKER.search(text)
    if m:
        sessions = int(m.group(1))

    for rule in rule_set.rules:
        match = rule.pattern.search(text)
        if match:
            start = max(0, match.start() - 40)
            end = min(len(text), match.end() + 40)
            return OutcomeClass(rule.verdict, goal, sessions, text[start:end].strip())

    if exit_code != 0:
        tail = text.strip().splitlines()[-1] if text.strip() else ""
        return OutcomeClass(Verdict.TOOL_ERROR, goal, sessions, tail)
    return OutcomeClass(rule_set.default_on_success, goal, sessions, "")


#: Console colour classes keyed by verdict, mirroring the result view.
COLOR_CLASSES = {
    Verdict.SAFE: "safe",
    Verdict.ATTACK: "attack",
    Verdict.INCONCLUSIVE: "inconclusive",
}


def classify_spans(tool: str, text: str, rule_sets: Optional[dict[str, ClassifierRuleSet]] = None) -> list[dict]:
    """Colourable regions of an output chunk: ``{start, end, cls}`` records."""
    rule_set = (rule_sets or DEFAULT_RULE_SETS).get(tool) or DEFAULT_RULE_SETS["generic"]
    spans: list[dict] = []
    for rule in rule_set.rules:
        if rule.verdict not in COLOR_CLASSES:
            continue
        for match in rule.pattern.finditer(text):
            if any(s["start"] <= match.start() < s["end"] for s in spans):
                continue
            spans.append({"start": match.start(), "end": match.end(), "cls": COLOR_CLASSES[rule.verdict]})
    spans.sort(key=lambda s: s["start"])
    return spans
