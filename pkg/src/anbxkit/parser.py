"""Recursive-descent parser for AnB and AnBx protocol files.

The grammar is line-oriented: each declaration, knowledge entry, action, and
goal occupies one line. Sections appear in a fixed order (Protocol, Types,
Definitions?, Equations?, Knowledge, Actions, Goals). ``#`` starts a comment
running to end of line.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .model import (
    Action,
    Apply,
    AsymEnc,
    Atom,
    AuthGoal,
    Cat,
    Diagnostic,
    Dialect,
    FnSignature,
    Goal,
    Knowledge,
    Macro,
    PLAIN,
    ProtocolModel,
    SecrecyGoal,
    Severity,
    SourceFile,
    Span,
    SymEnc,
    Term,
    TripleMode,
    TypeDecl,
    TYPE_KEYWORDS,
    TYPE_KEYWORD_ALIASES,
    WeakAuthGoal,
    cat,
)

SECTION_ORDER = ("Protocol", "Types", "Definitions", "Equations", "Knowledge", "Actions", "Goals")
MANDATORY_SECTIONS = ("Protocol", "Types", "Knowledge", "Actions")


@dataclass
class Token:
    kind: str  # IDENT, PUNCT, NEWLINE, EOF
    value: str
    span: Span


class ParseError(Exception):
    def __init__(self, diagnostic: Diagnostic):
        super().__init__(diagnostic.message)
        self.diagnostic = diagnostic


@dataclass
class ParseResult:
    model: Optional[ProtocolModel]
    diagnostics: list[Diagnostic]

    @property
    def ok(self) -> bool:
        return self.model is not None


_PUNCT2 = ("->", "{|", "|}")
_PUNCT1 = "(){},:;|@=-"


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(text)

    def span(start: int, start_line: int, start_col: int) -> Span:
        return Span(start, i, start_line, start_col, line, col)

    while i < n:
        c = text[i]
        start, sl, sc = i, line, col
        if c == "\n":
            i += 1
            line += 1
            col = 1
            if tokens and tokens[-1].kind != "NEWLINE":
                tokens.append(Token("NEWLINE", "\n", Span(start, i, sl, sc, line, col)))
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
                col += 1
            continue
        two = text[i : i + 2]
        if two in _PUNCT2:
            i += 2
            col += 2
            tokens.append(Token("PUNCT", two, span(start, sl, sc)))
            continue
        if c in _PUNCT1:
            i += 1
            col += 1
            tokens.append(Token("PUNCT", c, span(start, sl, sc)))
            continue
        if c.isalpha() or c == "_":
            while i < n and (text[i].isalnum() or text[i] == "_"):
                i += 1
                col += 1
            tokens.append(Token("IDENT", text[start:i], span(start, sl, sc)))
            continue
        if c.isdigit():
            while i < n and text[i].isalnum():
                i += 1
                col += 1
            tokens.append(Token("IDENT", text[start:i], span(start, sl, sc)))
            continue
        i += 1
        col += 1
        raise ParseError(
            Diagnostic(Severity.ERROR, "E-PARSE", span(start, sl, sc), f"unexpected character {c!r}")
        )
    tokens.append(Token("EOF", "", Span(n, n, line, col, line, col)))
    return tokens


class _Parser:
    def __init__(self, source: SourceFile):
        self.source = source
        self.dialect = source.dialect
        self.tokens = tokenize(source.text)
        self.pos = 0
        self.diagnostics: list[Diagnostic] = []

    # -- token helpers ------------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def at(self, value: str) -> bool:
        tok = self.peek()
        return tok.value == value and tok.kind in ("PUNCT", "IDENT")

    def accept(self, value: str) -> Optional[Token]:
        if self.at(value):
            return self.next()
        return None

    def expect(self, value: str, what: str = "") -> Token:
        tok = self.peek()
        if not self.at(value):
            hint = what or f"{value!r}"
            raise ParseError(
                Diagnostic(Severity.ERROR, "E-PARSE", tok.span, f"expected {hint}, found {tok.value!r}")
            )
        return self.next()

    def expect_ident(self, what: str = "identifier") -> Token:
        tok = self.peek()
        if tok.kind != "IDENT":
            raise ParseError(
                Diagnostic(Severity.ERROR, "E-PARSE", tok.span, f"expected {what}, found {tok.value!r}")
            )
        return self.next()

    def skip_newlines(self) -> None:
        while self.peek().kind == "NEWLINE":
            self.next()

    def end_of_line(self) -> None:
        tok = self.peek()
        if tok.kind in ("NEWLINE", "EOF"):
            self.skip_newlines()
            return
        if self.accept(";"):
            self.skip_newlines()
            return
        raise ParseError(
            Diagnostic(Severity.ERROR, "E-PARSE", tok.span, f"expected end of line, found {tok.value!r}")
        )

    def at_section_header(self) -> Optional[str]:
        tok = self.peek()
        if tok.kind == "IDENT" and tok.value in SECTION_ORDER and self.peek(1).value == ":":
            return tok.value
        return None

    # -- top level ----------------------------------------------------------

    def parse(self) -> ProtocolModel:
        self.skip_newlines()
        seen: list[str] = []

        name = self._header("Protocol", seen)
        name_tok = self.expect_ident("protocol name")
        self.end_of_line()

        self._header("Types", seen)
        type_decls, certified = self._types()

        definitions: tuple[Macro, ...] = ()
        equations: tuple[tuple[Term, Term], ...] = ()
        if self.at_section_header() == "Definitions":
            self._header("Definitions", seen)
            definitions = self._definitions()
        if self.at_section_header() == "Equations":
            self._header("Equations", seen)
            equations = self._equations()

        self._header("Knowledge", seen)
        knowledge = self._knowledge()

        self._header("Actions", seen)
        actions = self._actions()
        if not actions:
            raise ParseError(
                Diagnostic(Severity.ERROR, "E-PARSE", self.peek().span, "Actions section is empty")
            )

        goals: tuple[Goal, ...] = ()
        if self.at_section_header() == "Goals":
            self._header("Goals", seen)
            goals = self._goals()
        else:
            self.diagnostics.append(
                Diagnostic(Severity.WARNING, "W-NO-GOALS", self.peek().span, "protocol declares no goals")
            )

        self.skip_newlines()
        tok = self.peek()
        if tok.kind != "EOF":
            if tok.kind == "IDENT" and tok.value in SECTION_ORDER:
                raise ParseError(
                    Diagnostic(
                        Severity.ERROR,
                        "E-SECTION-ORDER",
                        tok.span,
                        f"section {tok.value} out of order (expected order: {', '.join(SECTION_ORDER)})",
                    )
                )
            raise ParseError(
                Diagnostic(Severity.ERROR, "E-PARSE", tok.span, f"unexpected input after Goals: {tok.value!r}")
            )

        text_span = Span(0, len(self.source.text))
        if goals == () and not any(d.code == "W-NO-GOALS" for d in self.diagnostics):
            self.diagnostics.append(
                Diagnostic(Severity.WARNING, "W-NO-GOALS", tok.span, "protocol declares no goals")
            )
        return ProtocolModel(
            name=name_tok.value,
            type_decls=type_decls,
            certified=certified,
            knowledge=knowledge,
            definitions=definitions,
            equations=equations,
            actions=actions,
            goals=goals,
            span=text_span,
        )

    def _header(self, section: str, seen: list[str]) -> str:
        self.skip_newlines()
        tok = self.peek()
        found = self.at_section_header()
        if found != section:
            if found is not None and found in SECTION_ORDER:
                if SECTION_ORDER.index(found) < SECTION_ORDER.index(section) or found in seen:
                    raise ParseError(
                        Diagnostic(
                            Severity.ERROR,
                            "E-SECTION-ORDER",
                            tok.span,
                            f"section {found} out of order; expected {section}",
                        )
                    )
            if section in MANDATORY_SECTIONS:
                raise ParseError(
                    Diagnostic(
                        Severity.ERROR,
                        "E-SECTION-MISSING",
                        tok.span,
                        f"mandatory section {section} is missing",
                    )
                )
        self.next()  # section name
        self.expect(":")
        self.skip_newlines()
        seen.append(section)
        return section

    # -- sections -----------------------------------------------------------

    def _types(self) -> tuple[tuple[TypeDecl, ...], tuple[str, ...]]:
        decls: list[TypeDecl] = []
        certified: set[str] = set()
        while True:
            self.skip_newlines()
            tok = self.peek()
            if self.at_section_header() or tok.kind == "EOF":
                break
            if tok.kind != "IDENT":
                raise ParseError(
                    Diagnostic(Severity.ERROR, "E-PARSE", tok.span, f"expected type keyword, found {tok.value!r}")
                )
            keyword = TYPE_KEYWORD_ALIASES.get(tok.value, tok.value)
            if keyword == "Certified":
                if self.dialect is Dialect.ANB:
                    raise ParseError(
                        Diagnostic(
                            Severity.ERROR,
                            "E-DIALECT",
                            tok.span,
                            "Certified declarations are not allowed in AnB files",
                        )
                    )
                self.next()
                certified.update(self._ident_list())
                self.end_of_line()
                continue
            if keyword not in TYPE_KEYWORDS:
                raise ParseError(
                    Diagnostic(Severity.ERROR, "E-PARSE", tok.span, f"unknown type keyword {tok.value!r}")
                )
            start = self.next()
            names = self._ident_list()
            signature = None
            if keyword == "Function" and self.accept(":"):
                if len(names) != 1:
                    raise ParseError(
                        Diagnostic(
                            Severity.ERROR,
                            "E-PARSE",
                            start.span,
                            "a Function signature applies to a single function name",
                        )
                    )
                params = self._ident_list()
                self.expect("->")
                result = self.expect_ident("result type").value
                signature = FnSignature(tuple(params), result)
            end_tok = self.tokens[self.pos - 1]
            decls.append(
                TypeDecl(
                    keyword,
                    tuple(names),
                    signature,
                    span=_merge(start.span, end_tok.span),
                    keyword_span=start.span,
                )
            )
            self.end_of_line()
        return tuple(decls), tuple(sorted(certified))

    def _ident_list(self) -> list[str]:
        names = [self.expect_ident().value]
        while self.accept(","):
            names.append(self.expect_ident().value)
        return names

    def _definitions(self) -> tuple[Macro, ...]:
        macros: list[Macro] = []
        while True:
            self.skip_newlines()
            if self.at_section_header() or self.peek().kind == "EOF":
                break
            name = self.expect_ident("macro name")
            params: list[str] = []
            if self.accept("("):
                if not self.at(")"):
                    params = self._ident_list()
                self.expect(")")
            self.expect("=")
            body = self._term()
            self.end_of_line()
            macros.append(Macro(name.value, tuple(params), body, span=_merge(name.span, body.span)))
        return tuple(macros)

    def _equations(self) -> tuple[tuple[Term, Term], ...]:
        eqs: list[tuple[Term, Term]] = []
        while True:
            self.skip_newlines()
            if self.at_section_header() or self.peek().kind == "EOF":
                break
            lhs = self._term()
            self.expect("=")
            rhs = self._term()
            self.end_of_line()
            eqs.append((lhs, rhs))
        return tuple(eqs)

    def _knowledge(self) -> tuple[Knowledge, ...]:
        entries: list[Knowledge] = []
        while True:
            self.skip_newlines()
            if self.at_section_header() or self.peek().kind == "EOF":
                break
            agent = self.expect_ident("agent name")
            self.expect(":")
            first = self._primary()
            terms = [first]
            while self.accept(","):
                terms.append(self._primary())
            self.end_of_line()
            entries.append(Knowledge(agent.value, tuple(terms), span=_merge(agent.span, terms[-1].span)))
        return tuple(entries)

    def _actions(self) -> tuple[Action, ...]:
        actions: list[Action] = []
        while True:
            self.skip_newlines()
            if self.at_section_header() or self.peek().kind == "EOF":
                break
            sender = self.expect_ident("sender")
            self.expect("->")
            receiver = self.expect_ident("receiver")
            mode = PLAIN
            if self.accept(","):
                mode = self._channel_mode()
            elif self.at("@"):
                mode = self._channel_mode()
            self.expect(":")
            payload = self._term()
            self.end_of_line()
            actions.append(
                Action(sender.value, receiver.value, mode, payload, span=_merge(sender.span, payload.span))
            )
        return tuple(actions)

    def _channel_mode(self) -> TripleMode:
        start = self.peek()
        fresh = self.accept("@") is not None
        if self.dialect is Dialect.ANB:
            raise ParseError(
                Diagnostic(
                    Severity.ERROR,
                    "E-DIALECT",
                    start.span,
                    "channel-mode triples are not allowed in AnB files",
                )
            )
        self.expect("(", "channel mode '('")
        auth, auth_span = self._mode_agent()
        self.expect("|")
        verifiers: list[str] = []
        verifier_spans: list[Span] = []
        if not self.at("|"):
            v, vs = self._mode_agent()
            if v is not None:
                verifiers.append(v)
                verifier_spans.append(vs)
            while self.accept(","):
                v, vs = self._mode_agent()
                if v is not None:
                    verifiers.append(v)
                    verifier_spans.append(vs)
        self.expect("|")
        dest, dest_span = self._mode_agent()
        close = self.expect(")")
        return TripleMode(
            auth=auth,
            verifiers=tuple(verifiers),
            dest=dest,
            fresh=fresh,
            span=_merge(start.span, close.span),
            auth_span=auth_span,
            verifier_spans=tuple(verifier_spans),
            dest_span=dest_span,
        )

    def _mode_agent(self) -> tuple[Optional[str], Span]:
        dash = self.accept("-")
        if dash is not None:
            return None, dash.span
        tok = self.expect_ident("agent name or '-'")
        return tok.value, tok.span

    def _goals(self) -> tuple[Goal, ...]:
        goals: list[Goal] = []
        while True:
            self.skip_newlines()
            if self.peek().kind == "EOF" or self.at_section_header():
                break
            goals.append(self._goal())
        return tuple(goals)

    def _goal(self) -> Goal:
        start = self.peek()
        term = self._term()
        tok = self.peek()
        if tok.value == "secret":
            self.next()
            self.expect("between")
            parties = self._ident_list()
            self.end_of_line()
            span = _merge(start.span, self.tokens[self.pos - 1].span)
            if len(set(parties)) != len(parties):
                raise ParseError(
                    Diagnostic(Severity.ERROR, "E-PARSE", span, "secrecy parties must be pairwise distinct")
                )
            return SecrecyGoal(term, tuple(parties), span=span)
        if isinstance(term, Atom) and tok.value in ("weakly", "authenticates"):
            weak = False
            if self.accept("weakly"):
                weak = True
            self.expect("authenticates")
            peer = self.expect_ident("peer agent")
            self.expect("on")
            on_term = self._term()
            self.end_of_line()
            span = _merge(start.span, on_term.span)
            cls = WeakAuthGoal if weak else AuthGoal
            return cls(verifier=term.name, peer=peer.value, term=on_term, span=span)
        raise ParseError(
            Diagnostic(
                Severity.ERROR,
                "E-PARSE",
                tok.span,
                "expected a goal ('... secret between ...' or '... authenticates ... on ...')",
            )
        )

    # -- terms --------------------------------------------------------------

    def _term(self) -> Term:
        first = self._primary()
        parts = [first]
        while self.at(",") and not self._comma_ends_term():
            self.next()
            parts.append(self._primary())
        if len(parts) == 1:
            return first
        return Cat(tuple(parts), span=_merge(first.span, parts[-1].span))

    def _comma_ends_term(self) -> bool:
        # In goals a comma may belong to the parties list; callers that need
        # that distinction parse parties separately, so commas always extend
        # the term here.
        return False

    def _primary(self) -> Term:
        tok = self.peek()
        if self.accept("{|"):
            payload = self._term()
            self.expect("|}")
            key = self._primary()
            return SymEnc(payload, key, span=_merge(tok.span, key.span))
        if self.accept("{"):
            payload = self._term()
            self.expect("}")
            key = self._primary()
            return AsymEnc(payload, key, span=_merge(tok.span, key.span))
        if self.accept("("):
            inner_parts = [self._primary()]
            while self.accept(","):
                inner_parts.append(self._primary())
            close = self.expect(")")
            return cat(inner_parts, span=_merge(tok.span, close.span))
        ident = self.expect_ident("term")
        if self.at("("):
            self.next()
            args: list[Term] = []
            if not self.at(")"):
                args.append(self._primary())
                while self.accept(","):
                    args.append(self._primary())
            close = self.expect(")")
            return Apply(ident.value, tuple(args), span=_merge(ident.span, close.span))
        return Atom(ident.value, span=ident.span)


def _merge(a: Span, b: Span) -> Span:
    return Span(a.start, b.end, a.line, a.col, b.end_line, b.end_col)


def parse(source: SourceFile) -> ParseResult:
    """Parse a protocol file into a model.

    Returns a :class:`ParseResult`; on failure ``model`` is ``None`` and the
    diagnostics list holds at least one error with a span. Never raises on
    arbitrary input.
    """
    try:
        parser = _Parser(source)
    except ParseError as exc:
        return ParseResult(None, [exc.diagnostic])
    try:
        model = parser.parse()
    except ParseError as exc:
        return ParseResult(None, parser.diagnostics + [exc.diagnostic])
    except RecursionError:
        return ParseResult(
            None,
            parser.diagnostics
            + [Diagnostic(Severity.ERROR, "E-PARSE", Span(0, len(source.text)), "input nests too deeply")],
        )
    return ParseResult(model, parser.diagnostics)


def parse_text(text: str, dialect: Dialect = Dialect.ANBX) -> ParseResult:
    return parse(SourceFile.from_text(text, dialect))
