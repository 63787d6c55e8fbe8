"""Core data model for AnB/AnBx protocol files.

Terms, actions, goals, the parsed protocol model, and diagnostics with
quick-fix edits. Everything here is an immutable value; structural equality
ignores source spans so that a pretty-printed round trip compares equal.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union


class Dialect(enum.Enum):
    ANBX = "AnBx"
    ANB = "AnB"


_EXTENSIONS = {".anbx": Dialect.ANBX, ".anb": Dialect.ANB}


@dataclass(frozen=True)
class SourceFile:
    path: Optional[Path]
    dialect: Dialect
    text: str

    @classmethod
    def from_path(cls, path: Union[str, Path], dialect: Optional[Dialect] = None) -> "SourceFile":
        path = Path(path)
        if dialect is None:
            dialect = dialect_for_path(path)
        return cls(path=path, dialect=dialect, text=path.read_text(encoding="utf-8"))

    @classmethod
    def from_text(cls, text: str, dialect: Dialect = Dialect.ANBX) -> "SourceFile":
        return cls(path=None, dialect=dialect, text=text)


def dialect_for_path(path: Path) -> Dialect:
    try:
        return _EXTENSIONS[path.suffix.lower()]
    except KeyError:
        raise ValueError(f"cannot infer dialect from extension of {path}")


@dataclass(frozen=True)
class Span:
    """Half-open byte range with 1-based line/column endpoints."""

    start: int
    end: int
    line: int = 1
    col: int = 1
    end_line: int = 1
    end_col: int = 1

    def contains(self, other: "Span") -> bool:
        return self.start <= other.start and other.end <= self.end

    def brief(self) -> str:
        return f"{self.line}:{self.col}-{self.end_line}:{self.end_col}"


EMPTY_SPAN = Span(0, 0)


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Term:
    span: Span = field(default=EMPTY_SPAN, compare=False, kw_only=True)


@dataclass(frozen=True)
class Atom(Term):
    name: str


@dataclass(frozen=True)
class Apply(Term):
    function: str
    args: tuple["Term", ...]


@dataclass(frozen=True)
class AsymEnc(Term):
    """``{payload}key`` -- asymmetric encryption / signing."""

    payload: Term
    key: Term


@dataclass(frozen=True)
class SymEnc(Term):
    """``{|payload|}key`` -- symmetric encryption."""

    payload: Term
    key: Term


@dataclass(frozen=True)
class Cat(Term):
    """Comma concatenation of two or more terms."""

    parts: tuple[Term, ...]

    def __post_init__(self) -> None:
        if len(self.parts) < 2:
            raise ValueError("Cat requires at least two parts")


def cat(parts: list[Term], span: Span = EMPTY_SPAN) -> Term:
    """Build a concatenation, collapsing the 1-element case."""
    if len(parts) == 1:
        return parts[0]
    return Cat(tuple(parts), span=span)


def atoms_in(term: Term) -> set[str]:
    """All identifiers occurring in a term (atoms and function names)."""
    out: set[str] = set()
    _collect_atoms(term, out)
    return out


def _collect_atoms(term: Term, out: set[str]) -> None:
    if isinstance(term, Atom):
        out.add(term.name)
    elif isinstance(term, Apply):
        out.add(term.function)
        for a in term.args:
            _collect_atoms(a, out)
    elif isinstance(term, (AsymEnc, SymEnc)):
        _collect_atoms(term.payload, out)
        _collect_atoms(term.key, out)
    elif isinstance(term, Cat):
        for p in term.parts:
            _collect_atoms(p, out)


# ---------------------------------------------------------------------------
# Channel modes, actions, goals


@dataclass(frozen=True)
class PlainMode:
    pass


@dataclass(frozen=True)
class TripleMode:
    auth: Optional[str]
    verifiers: tuple[str, ...]
    dest: Optional[str]
    fresh: bool = False
    span: Span = field(default=EMPTY_SPAN, compare=False, kw_only=True)
    auth_span: Span = field(default=EMPTY_SPAN, compare=False, kw_only=True)
    verifier_spans: tuple[Span, ...] = field(default=(), compare=False, kw_only=True)
    dest_span: Span = field(default=EMPTY_SPAN, compare=False, kw_only=True)


ChannelMode = Union[PlainMode, TripleMode]

PLAIN = PlainMode()


@dataclass(frozen=True)
class Action:
    sender: str
    receiver: str
    mode: ChannelMode
    payload: Term
    span: Span = field(default=EMPTY_SPAN, compare=False, kw_only=True)


@dataclass(frozen=True)
class Goal:
    span: Span = field(default=EMPTY_SPAN, compare=False, kw_only=True)


@dataclass(frozen=True)
class WeakAuthGoal(Goal):
    verifier: str
    peer: str
    term: Term


@dataclass(frozen=True)
class AuthGoal(Goal):
    verifier: str
    peer: str
    term: Term


@dataclass(frozen=True)
class SecrecyGoal(Goal):
    term: Term
    parties: tuple[str, ...]


# ---------------------------------------------------------------------------
# Declarations and the model


@dataclass(frozen=True)
class FnSignature:
    params: tuple[str, ...]
    result: str


#: Declaration keywords of the Types section, in canonical spelling.
TYPE_KEYWORDS = ("Agent", "Number", "SymmetricKey", "PublicKey", "Function")

#: Accepted input alias -> canonical keyword.
TYPE_KEYWORD_ALIASES = {"Symmetric_key": "SymmetricKey"}


@dataclass(frozen=True)
class TypeDecl:
    keyword: str
    names: tuple[str, ...]
    signature: Optional[FnSignature] = None
    span: Span = field(default=EMPTY_SPAN, compare=False, kw_only=True)
    keyword_span: Span = field(default=EMPTY_SPAN, compare=False, kw_only=True)


@dataclass(frozen=True)
class Macro:
    name: str
    params: tuple[str, ...]
    body: Term
    span: Span = field(default=EMPTY_SPAN, compare=False, kw_only=True)


@dataclass(frozen=True)
class Knowledge:
    agent: str
    terms: tuple[Term, ...]
    span: Span = field(default=EMPTY_SPAN, compare=False, kw_only=True)


@dataclass(frozen=True)
class ProtocolModel:
    name: str
    type_decls: tuple[TypeDecl, ...]
    certified: tuple[str, ...]
    knowledge: tuple[Knowledge, ...]
    definitions: tuple[Macro, ...]
    equations: tuple[tuple[Term, Term], ...]
    actions: tuple[Action, ...]
    goals: tuple[Goal, ...]
    span: Span = field(default=EMPTY_SPAN, compare=False, kw_only=True)

    def declared_names(self) -> set[str]:
        names: set[str] = set()
        for d in self.type_decls:
            names.update(d.names)
        return names

    def knowledge_of(self, agent: str) -> tuple[Term, ...]:
        for k in self.knowledge:
            if k.agent == agent:
                return k.terms
        return ()


# ---------------------------------------------------------------------------
# Diagnostics


class Severity(enum.IntEnum):
    INFO = 0
    WARNING = 1
    ERROR = 2


@dataclass(frozen=True)
class Edit:
    span: Span
    replacement: str
    label: str

    def apply(self, text: str) -> str:
        return text[: self.span.start] + self.replacement + text[self.span.end :]


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    code: str
    span: Span
    message: str
    fixes: tuple[Edit, ...] = ()

    def render(self) -> str:
        return f"{self.severity.name.lower()} {self.code} {self.span.brief()} {self.message}"

    def to_record(self) -> dict:
        return {
            "severity": self.severity.name.lower(),
            "code": self.code,
            "start": self.span.start,
            "end": self.span.end,
            "line": self.span.line,
            "col": self.span.col,
            "endLine": self.span.end_line,
            "endCol": self.span.end_col,
            "message": self.message,
            "fixes": [
                {"start": f.span.start, "end": f.span.end, "replacement": f.replacement, "label": f.label}
                for f in self.fixes
            ],
        }


def has_errors(diagnostics: list[Diagnostic]) -> bool:
    return any(d.severity is Severity.ERROR for d in diagnostics)
