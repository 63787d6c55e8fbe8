"""Per-protocol, per-goal result aggregation and the single-goal benchmark."""

from __future__ import annotations

import time
from dataclasses import dataclass
from decimal import Decimal, ROUND_HALF_UP
from pathlib import Path
from typing import Optional

from .classify import Verdict


@dataclass(frozen=True)
class GoalResult:
    protocol_name: str
    goal_label: str
    status: Verdict
    sessions: Optional[int]
    tool_name: str
    updated_at: float

    @property
    def key(self) -> tuple:
        return (self.protocol_name, self.goal_label, self.tool_name, self.sessions)

    def to_record(self) -> dict:
        return {
            "protocol": self.protocol_name,
            "goal": self.goal_label,
            "status": self.status.value,
            "sessions": self.sessions,
            "tool": self.tool_name,
            "updatedAt": self.updated_at,
        }


# Failing-first: attacks, then anything unresolved, then safe.
_STATUS_RANK = {
    Verdict.ATTACK: 0,
    Verdict.INCONCLUSIVE: 1,
    Verdict.TIMEOUT: 1,
    Verdict.TOOL_ERROR: 1,
    Verdict.SAFE: 2,
}


class ResultTree:
    """Keyed upsert store; goals within a protocol sort failing-first."""

    def __init__(self) -> None:
        self._protocols: dict[str, dict[tuple, GoalResult]] = {}

    def ingest_event(self, event: dict) -> None:
        """Fold a task-terminal event carrying a classified outcome."""
        if event.get("type") != "task-terminal":
            return
        outcome = event.get("outcome")
        meta = event.get("meta") or {}
        protocol = meta.get("protocol")
        if outcome is None or not protocol:
            return
        goal = outcome.get("goalName") or meta.get("goal") or "(all)"
        self.ingest(
            GoalResult(
                protocol_name=protocol,
                goal_label=goal,
                status=Verdict(outcome["verdict"]),
                sessions=outcome.get("sessions") or meta.get("sessions"),
                tool_name=meta.get("tool", "unknown"),
                updated_at=time.time(),
            )
        )

    def ingest(self, result: GoalResult) -> None:
        bucket = self._protocols.setdefault(result.protocol_name, {})
        bucket[result.key] = result

    def goals_for(self, protocol: str) -> list[GoalResult]:
        bucket = self._protocols.get(protocol, {})
        return sorted(bucket.values(), key=lambda r: (_STATUS_RANK[r.status], r.goal_label))

    def ordered_view(self, alphabetical: bool = False) -> list[tuple[str, list[GoalResult]]]:
        names = list(self._protocols)
        if alphabetical:
            names = sorted(names)
        return [(name, self.goals_for(name)) for name in names]

    def to_records(self, alphabetical: bool = False) -> list[dict]:
        out = []
        for name, goals in self.ordered_view(alphabetical):
            out.append({"protocol": name, "goals": [g.to_record() for g in goals]})
        return out

    def clear(self) -> None:
        self._protocols.clear()


# ---------------------------------------------------------------------------
# Benchmarking


@dataclass(frozen=True)
class BenchRow:
    protocol: str
    goals: int
    attacks: int
    all_seconds: Decimal
    single_seconds: Decimal
    delta_percent: Optional[Decimal]
    note: str = ""


def bench_delta(all_seconds, single_seconds) -> Decimal:
    """Percentage change of single-goal time over all-goals time, rounded
    half-up to two decimals."""
    all_d = Decimal(str(all_seconds))
    sgl_d = Decimal(str(single_seconds))
    if all_d <= 0:
        raise ZeroDivisionError("E-DIV0: all-goals time must be positive")
    delta = Decimal(100) * (sgl_d - all_d) / all_d
    return delta.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)


def bench_run(
    corpus: list[Path],
    tool: str,
    repetitions: int,
    run_all,
    run_single,
    goal_counter,
) -> list[BenchRow]:
    """Average all-goals vs parallel single-goals wall time per protocol.

    ``run_all(path)`` and ``run_single(path)`` execute one repetition and
    return the per-goal verdicts observed; ``goal_counter(path)`` reports the
    protocol's goal count. Tool failures annotate the row instead of
    aborting the table.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    rows: list[BenchRow] = []
    for path in corpus:
        goals = goal_counter(path)
        note = ""
        attacks = 0
        all_total = 0.0
        single_total = 0.0
        verdicts: list[Verdict] = []
        try:
            for _ in range(repetitions):
                start = time.monotonic()
                run_all(path)
                all_total += time.monotonic() - start
            for _ in range(repetitions):
                start = time.monotonic()
                verdicts = run_single(path)
                single_total += time.monotonic() - start
            attacks = sum(1 for v in verdicts if v is Verdict.ATTACK)
        except Exception as exc:  # noqa: BLE001 - annotate, don't abort
            rows.append(BenchRow(path.stem, goals, 0, Decimal(0), Decimal(0), None, note=f"error: {exc}"))
            continue
        all_avg = Decimal(str(all_total / repetitions)).quantize(Decimal("0.001"))
        single_avg = Decimal(str(single_total / repetitions)).quantize(Decimal("0.001"))
        delta = bench_delta(all_avg, single_avg) if all_avg > 0 else None
        rows.append(BenchRow(path.stem, goals, attacks, all_avg, single_avg, delta, note=note))
    return rows


_HEADERS = ("Protocol", "Goals/Attacks", "all", "sgl", "Delta%")


def render_bench_table(rows: list[BenchRow]) -> str:
    """Aligned plain-text table with the benchmark column set."""
    data = [
        (
            r.protocol,
            f"{r.goals}/{r.attacks}",
            str(r.all_seconds),
            str(r.single_seconds),
            str(r.delta_percent) if r.delta_percent is not None else r.note or "-",
        )
        for r in rows
    ]
    widths = [max(len(h), *(len(d[i]) for d in data)) if data else len(h) for i, h in enumerate(_HEADERS)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(_HEADERS, widths))]
    for d in data:
        lines.append("  ".join(v.ljust(w) for v, w in zip(d, widths)))
    return "\n".join(lines) + "\n"


def render_bench_tsv(rows: list[BenchRow]) -> str:
    lines = ["\t".join(_HEADERS)]
    for r in rows:
        delta = str(r.delta_percent) if r.delta_percent is not None else ""
        lines.append(f"{r.protocol}\t{r.goals}/{r.attacks}\t{r.all_seconds}\t{r.single_seconds}\t{delta}")
    return "\n".join(lines) + "\n"


def worst_verdict(verdicts: list[Verdict]) -> Verdict:
    """Attack dominates, then tool error, then timeout, then inconclusive."""
    order = (Verdict.ATTACK, Verdict.TOOL_ERROR, Verdict.TIMEOUT, Verdict.INCONCLUSIVE, Verdict.SAFE)
    for v in order:
        if v in verdicts:
            return v
    return Verdict.SAFE
