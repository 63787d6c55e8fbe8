"""Workbench for Alice & Bob security protocol notations: parsing,
validation, channel-mode lowering, verifier orchestration, and result
aggregation."""

from .classify import OutcomeClass, Verdict, classify_output
from .model import Diagnostic, Dialect, ProtocolModel, Severity, SourceFile, Span
from .outline import outline
from .parser import parse, parse_text
from .printer import pretty_print
from .results import ResultTree, bench_delta
from .scheduler import Scheduler, SchedulerConfig, TaskKind
from .semantics import validate
from .transform import compile_channels, split_goals
from .workbench import VerifyRequest, Workbench

__version__ = "0.1.0"

__all__ = [
    "OutcomeClass",
    "Verdict",
    "classify_output",
    "Diagnostic",
    "Dialect",
    "ProtocolModel",
    "Severity",
    "SourceFile",
    "Span",
    "outline",
    "parse",
    "parse_text",
    "pretty_print",
    "ResultTree",
    "bench_delta",
    "Scheduler",
    "SchedulerConfig",
    "TaskKind",
    "validate",
    "compile_channels",
    "split_goals",
    "VerifyRequest",
    "Workbench",
    "__version__",
]
