"""Scoping, type checking, and model validation with quick-fix synthesis.

``validate`` is pure: identical models yield identical diagnostic lists,
ordered by source position. Quick fixes are plain text edits; applying any
fix and re-validating removes the diagnostic that offered it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Union

from .model import (
    Apply,
    AsymEnc,
    Atom,
    AuthGoal,
    Cat,
    Diagnostic,
    Dialect,
    Edit,
    EMPTY_SPAN,
    Goal,
    Macro,
    ProtocolModel,
    SecrecyGoal,
    Severity,
    Span,
    SymEnc,
    Term,
    TripleMode,
    TypeDecl,
    WeakAuthGoal,
)
from .printer import print_term


class BaseType(enum.Enum):
    AGENT = "Agent"
    NUMBER = "Number"
    SYMKEY = "SymmetricKey"
    PUBKEY = "PublicKey"
    PRIVKEY = "PrivateKey"
    PAYLOAD = "Payload"


@dataclass(frozen=True)
class FnType:
    """Function signature; ``params`` of ``None`` accepts any argument list."""

    params: Optional[tuple[BaseType, ...]]
    result: BaseType


SemanticType = Union[BaseType, FnType]

_TYPE_NAMES = {t.value: t for t in BaseType}
_TYPE_NAMES["Symmetric_key"] = BaseType.SYMKEY


def builtin_signatures() -> dict[str, FnType]:
    """Predefined function symbols available in every protocol."""
    return {
        "pk": FnType((BaseType.AGENT,), BaseType.PUBKEY),
        "sk": FnType((BaseType.AGENT,), BaseType.PUBKEY),
        "inv": FnType((BaseType.PUBKEY,), BaseType.PRIVKEY),
        "hash": FnType((BaseType.PAYLOAD,), BaseType.NUMBER),
        "exp": FnType((BaseType.PAYLOAD, BaseType.PAYLOAD), BaseType.PAYLOAD),
        "xor": FnType((BaseType.PAYLOAD, BaseType.PAYLOAD), BaseType.PAYLOAD),
    }


@dataclass(frozen=True)
class SymbolInfo:
    name: str
    type: SemanticType
    kind: str  # declared | builtin | macro-param | macro
    decl_span: Span = EMPTY_SPAN
    decl: Optional[TypeDecl] = None


@dataclass
class Scope:
    symbols: dict[str, SymbolInfo]
    parent: Optional["Scope"] = None

    def resolve(self, name: str) -> Optional[SymbolInfo]:
        scope: Optional[Scope] = self
        while scope is not None:
            info = scope.symbols.get(name)
            if info is not None:
                return info
            scope = scope.parent
        return None


@dataclass
class SymbolTable:
    globals: Scope
    macro_scopes: dict[str, Scope]
    declaration_order: list[str]

    def resolve(self, name: str) -> Optional[SymbolInfo]:
        return self.globals.resolve(name)


def _decl_type(decl: TypeDecl) -> SemanticType:
    if decl.keyword == "Function":
        if decl.signature is None:
            return FnType(None, BaseType.PAYLOAD)
        params = tuple(_TYPE_NAMES.get(p, BaseType.PAYLOAD) for p in decl.signature.params)
        result = _TYPE_NAMES.get(decl.signature.result, BaseType.PAYLOAD)
        return FnType(params, result)
    return _TYPE_NAMES[decl.keyword]


def _edit_distance(a: str, b: str) -> int:
    if a == b:
        return 0
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def nearest_name(name: str, candidates: list[str]) -> Optional[str]:
    """Closest declared name by edit distance; ties break by declaration order."""
    best: Optional[str] = None
    best_dist = len(name) + 1
    for cand in candidates:
        d = _edit_distance(name, cand)
        if d < best_dist:
            best, best_dist = cand, d
    return best


def resolve_scopes(model: ProtocolModel) -> tuple[SymbolTable, list[Diagnostic]]:
    """Bind every identifier occurrence to a declaration.

    Unresolved identifiers yield E-UNDECLARED with a nearest-name quick fix;
    duplicate declarations in one scope yield E-REDECLARED.
    """
    diagnostics: list[Diagnostic] = []
    symbols: dict[str, SymbolInfo] = {}
    order: list[str] = []

    for name, sig in builtin_signatures().items():
        symbols[name] = SymbolInfo(name, sig, "builtin")

    for decl in model.type_decls:
        ty = _decl_type(decl)
        for name in decl.names:
            if name in symbols and symbols[name].kind == "declared":
                diagnostics.append(
                    Diagnostic(
                        Severity.ERROR,
                        "E-REDECLARED",
                        decl.span,
                        f"{name} is already declared",
                    )
                )
                continue
            symbols[name] = SymbolInfo(name, ty, "declared", decl.span, decl)
            order.append(name)

    global_scope = Scope(symbols)
    macro_scopes: dict[str, Scope] = {}
    for macro in model.definitions:
        if macro.name in symbols and symbols[macro.name].kind in ("declared", "macro"):
            diagnostics.append(
                Diagnostic(Severity.ERROR, "E-REDECLARED", macro.span, f"{macro.name} is already declared")
            )
        params: dict[str, SymbolInfo] = {}
        for p in macro.params:
            if p in params:
                diagnostics.append(
                    Diagnostic(Severity.ERROR, "E-REDECLARED", macro.span, f"parameter {p} repeats")
                )
            params[p] = SymbolInfo(p, BaseType.PAYLOAD, "macro-param", macro.span)
        macro_scopes[macro.name] = Scope(params, parent=global_scope)
        symbols[macro.name] = SymbolInfo(
            macro.name,
            FnType(tuple(BaseType.PAYLOAD for _ in macro.params), BaseType.PAYLOAD),
            "macro",
            macro.span,
        )
        order.append(macro.name)

    table = SymbolTable(global_scope, macro_scopes, order)

    def check_term(term: Term, scope: Scope) -> None:
        for name, span in _occurrences(term):
            if scope.resolve(name) is None:
                fixes: tuple[Edit, ...] = ()
                suggestion = nearest_name(name, order)
                if suggestion is not None:
                    fixes = (Edit(span, suggestion, f"replace with {suggestion}"),)
                diagnostics.append(
                    Diagnostic(Severity.ERROR, "E-UNDECLARED", span, f"{name} is not declared", fixes)
                )

    for macro in model.definitions:
        check_term(macro.body, macro_scopes[macro.name])
    for entry in model.knowledge:
        for term in entry.terms:
            check_term(term, global_scope)
    for lhs, rhs in model.equations:
        check_term(lhs, global_scope)
        check_term(rhs, global_scope)
    def check_name(name: str, span: Span) -> None:
        if global_scope.resolve(name) is None:
            fixes: tuple[Edit, ...] = ()
            suggestion = nearest_name(name, order)
            if suggestion is not None:
                fixes = (Edit(span, suggestion, f"replace with {suggestion}"),)
            diagnostics.append(
                Diagnostic(Severity.ERROR, "E-UNDECLARED", span, f"{name} is not declared", fixes)
            )

    for action in model.actions:
        check_term(action.payload, global_scope)
        mode = action.mode
        if isinstance(mode, TripleMode):
            if mode.auth is not None:
                check_name(mode.auth, mode.auth_span)
            for name, span in zip(mode.verifiers, mode.verifier_spans):
                check_name(name, span)
            if mode.dest is not None:
                check_name(mode.dest, mode.dest_span)
    for goal in model.goals:
        if isinstance(goal, (AuthGoal, WeakAuthGoal)):
            check_term(goal.term, global_scope)
        elif isinstance(goal, SecrecyGoal):
            check_term(goal.term, global_scope)

    return table, diagnostics


def _occurrences(term: Term) -> list[tuple[str, Span]]:
    out: list[tuple[str, Span]] = []

    def walk(t: Term) -> None:
        if isinstance(t, Atom):
            out.append((t.name, t.span))
        elif isinstance(t, Apply):
            out.append((t.function, t.span))
            for a in t.args:
                walk(a)
        elif isinstance(t, (AsymEnc, SymEnc)):
            walk(t.payload)
            walk(t.key)
        elif isinstance(t, Cat):
            for p in t.parts:
                walk(p)

    walk(term)
    return out


# ---------------------------------------------------------------------------
# Type inference


class _Inference:
    def __init__(self, table: SymbolTable, diagnostics: list[Diagnostic]):
        self.table = table
        self.diagnostics = diagnostics
        self._macro_results: dict[str, BaseType] = {}
        self._in_progress: set[str] = set()

    def infer(self, term: Term, scope: Optional[Scope] = None) -> SemanticType:
        scope = scope or self.table.globals
        if isinstance(term, Atom):
            info = scope.resolve(term.name)
            if info is None:
                return BaseType.PAYLOAD
            if isinstance(info.type, FnType) and info.type.params == ():
                return info.type.result
            return info.type
        if isinstance(term, Apply):
            return self._infer_apply(term, scope)
        if isinstance(term, SymEnc):
            self.infer(term.payload, scope)
            key_type = self.infer(term.key, scope)
            if key_type is not BaseType.SYMKEY:
                self.diagnostics.append(self._cipher_error(term, key_type, symmetric=True))
            return BaseType.PAYLOAD
        if isinstance(term, AsymEnc):
            self.infer(term.payload, scope)
            key_type = self.infer(term.key, scope)
            if key_type not in (BaseType.PUBKEY, BaseType.PRIVKEY):
                self.diagnostics.append(self._cipher_error(term, key_type, symmetric=False))
            return BaseType.PAYLOAD
        if isinstance(term, Cat):
            for p in term.parts:
                self.infer(p, scope)
            return BaseType.PAYLOAD
        return BaseType.PAYLOAD

    def _infer_apply(self, term: Apply, scope: Scope) -> SemanticType:
        info = scope.resolve(term.function)
        if info is None or not isinstance(info.type, FnType):
            for a in term.args:
                self.infer(a, scope)
            if info is not None:
                self.diagnostics.append(
                    Diagnostic(
                        Severity.ERROR,
                        "E-ARGTYPE",
                        term.span,
                        f"{term.function} is not a function",
                    )
                )
            return BaseType.PAYLOAD
        fn = info.type
        arg_types = [self.infer(a, scope) for a in term.args]
        if fn.params is not None and len(arg_types) != len(fn.params):
            self.diagnostics.append(
                Diagnostic(
                    Severity.ERROR,
                    "E-ARITY",
                    term.span,
                    f"{term.function} expects {len(fn.params)} argument(s), got {len(arg_types)}",
                )
            )
        elif fn.params is not None:
            for i, (actual, expected) in enumerate(zip(arg_types, fn.params), start=1):
                if not _compatible(actual, expected):
                    self.diagnostics.append(
                        Diagnostic(
                            Severity.ERROR,
                            "E-ARGTYPE",
                            term.args[i - 1].span,
                            f"{term.function} expects {expected.value} at argument {i}, "
                            f"got {_type_name(actual)}",
                        )
                    )
        if info.kind == "macro":
            return self._macro_result(term.function)
        return fn.result

    def _macro_result(self, name: str) -> BaseType:
        if name in self._macro_results:
            return self._macro_results[name]
        if name in self._in_progress:
            return BaseType.PAYLOAD
        self._in_progress.add(name)
        scope = self.table.macro_scopes.get(name)
        result = BaseType.PAYLOAD
        if scope is not None:
            pass  # macro bodies are Payload-typed; checked separately
        self._in_progress.discard(name)
        self._macro_results[name] = result
        return result

    def _cipher_error(self, term: Union[SymEnc, AsymEnc], key_type: SemanticType, symmetric: bool) -> Diagnostic:
        fixes: list[Edit] = []
        key = term.key
        # Fix 1: retype the key identifier when it has a dedicated declaration.
        if isinstance(key, Atom):
            info = self.table.resolve(key.name)
            wanted = "SymmetricKey" if symmetric else "PublicKey"
            if (
                info is not None
                and info.decl is not None
                and len(info.decl.names) == 1
                and info.decl.keyword != "Function"
            ):
                fixes.append(
                    Edit(info.decl.keyword_span, wanted, f"declare {key.name} as {wanted}")
                )
        # Fix 2: switch the encryption scheme to match the key.
        if symmetric:
            rewritten = f"{{{print_term(term.payload)}}}{_key_text(key)}"
            fixes.append(Edit(term.span, rewritten, "use asymmetric encryption"))
            return Diagnostic(
                Severity.ERROR,
                "E-SYMKEY",
                term.span,
                f"symmetric encryption requires a SymmetricKey key, got {_type_name(key_type)}",
                tuple(fixes),
            )
        rewritten = f"{{|{print_term(term.payload)}|}}{_key_text(key)}"
        fixes.append(Edit(term.span, rewritten, "use symmetric encryption"))
        return Diagnostic(
            Severity.ERROR,
            "E-ASYMKEY",
            term.span,
            f"asymmetric encryption requires a PublicKey or PrivateKey key, got {_type_name(key_type)}",
            tuple(fixes),
        )


def _key_text(key: Term) -> str:
    text = print_term(key)
    if isinstance(key, Cat):
        return f"({text})"
    return text


def _compatible(actual: SemanticType, expected: BaseType) -> bool:
    if expected is BaseType.PAYLOAD:
        return True
    return actual == expected


def _type_name(t: SemanticType) -> str:
    if isinstance(t, FnType):
        return "Function"
    return t.value


def infer_term_type(table: SymbolTable, term: Term, scope: Optional[Scope] = None) -> tuple[SemanticType, list[Diagnostic]]:
    """Bottom-up type of a term plus any arity/type diagnostics."""
    diagnostics: list[Diagnostic] = []
    ty = _Inference(table, diagnostics).infer(term, scope)
    return ty, diagnostics


# ---------------------------------------------------------------------------
# Knowledge constructibility


def _inverse_key(key: Term) -> Term:
    if isinstance(key, Apply) and key.function == "inv" and len(key.args) == 1:
        return key.args[0]
    return Apply("inv", (key,))


def saturate(pool: set[Term]) -> set[Term]:
    """Close a term pool under pairing decomposition and decryption."""
    known = set(pool)
    changed = True
    while changed:
        changed = False
        for term in list(known):
            if isinstance(term, Cat):
                for part in term.parts:
                    if part not in known:
                        known.add(part)
                        changed = True
            elif isinstance(term, SymEnc):
                if can_derive(term.key, known) and term.payload not in known:
                    known.add(term.payload)
                    changed = True
            elif isinstance(term, AsymEnc):
                if can_derive(_inverse_key(term.key), known) and term.payload not in known:
                    known.add(term.payload)
                    changed = True
    return known


def can_derive(term: Term, known: set[Term]) -> bool:
    """Whether a term is constructible from a saturated pool.

    Function symbols are treated as public constructors; secrecy rests on
    the atoms (keys, nonces) they are applied to.
    """
    if term in known:
        return True
    if isinstance(term, Cat):
        return all(can_derive(p, known) for p in term.parts)
    if isinstance(term, Apply):
        return all(can_derive(a, known) for a in term.args)
    if isinstance(term, (SymEnc, AsymEnc)):
        return can_derive(term.payload, known) and can_derive(term.key, known)
    return False


def _strip_spans(term: Term) -> Term:
    if isinstance(term, Atom):
        return Atom(term.name)
    if isinstance(term, Apply):
        return Apply(term.function, tuple(_strip_spans(a) for a in term.args))
    if isinstance(term, AsymEnc):
        return AsymEnc(_strip_spans(term.payload), _strip_spans(term.key))
    if isinstance(term, SymEnc):
        return SymEnc(_strip_spans(term.payload), _strip_spans(term.key))
    if isinstance(term, Cat):
        return Cat(tuple(_strip_spans(p) for p in term.parts))
    return term


# ---------------------------------------------------------------------------
# Validation


def validate(model: ProtocolModel, dialect: Dialect = Dialect.ANBX) -> list[Diagnostic]:
    """Run all semantic checks over a parsed model.

    Covers scope resolution, term typing, channel-mode well-formedness,
    certification warnings, goal references, and sender-side knowledge
    constructibility. Diagnostics are ordered by source span.
    """
    table, diagnostics = resolve_scopes(model)
    inference = _Inference(table, diagnostics)

    agent_names = {
        name
        for name, info in table.globals.symbols.items()
        if info.kind == "declared" and info.type is BaseType.AGENT
    }

    for macro in model.definitions:
        inference.infer(macro.body, table.macro_scopes[macro.name])
    for entry in model.knowledge:
        if entry.agent not in agent_names:
            diagnostics.append(
                Diagnostic(
                    Severity.ERROR,
                    "E-ARGTYPE",
                    entry.span,
                    f"knowledge owner {entry.agent} is not a declared Agent",
                )
            )
        for term in entry.terms:
            inference.infer(term)
    for lhs, rhs in model.equations:
        inference.infer(lhs)
        inference.infer(rhs)

    for action in model.actions:
        for role, name in (("sender", action.sender), ("receiver", action.receiver)):
            if name not in agent_names:
                diagnostics.append(
                    Diagnostic(
                        Severity.ERROR,
                        "E-ARGTYPE",
                        action.span,
                        f"{role} {name} is not a declared Agent",
                    )
                )
        if isinstance(action.mode, TripleMode):
            _check_mode(action.mode, table, agent_names, diagnostics)
        inference.infer(action.payload)

    if dialect is Dialect.ANBX:
        certified = set(model.certified)
        for action in model.actions:
            mode = action.mode
            if not isinstance(mode, TripleMode):
                continue
            involved = [a for a in (mode.auth, *mode.verifiers, mode.dest) if a is not None]
            for agent in involved:
                if agent in agent_names and agent not in certified:
                    diagnostics.append(
                        Diagnostic(
                            Severity.WARNING,
                            "W-UNCERTIFIED",
                            mode.span,
                            f"{agent} appears in a channel mode but is not Certified",
                        )
                    )

    for goal in model.goals:
        _check_goal(goal, agent_names, inference, diagnostics)

    _check_knowledge(model, diagnostics)

    diagnostics.sort(key=lambda d: (d.span.start, d.span.end, d.code))
    return diagnostics


def _check_mode(
    mode: TripleMode,
    table: SymbolTable,
    agent_names: set[str],
    diagnostics: list[Diagnostic],
) -> None:
    if (mode.auth is None) != (len(mode.verifiers) == 0):
        diagnostics.append(
            Diagnostic(
                Severity.ERROR,
                "E-MODE-AUTHVERS",
                mode.span,
                "auth and verifiers must occur together in a channel mode",
            )
        )
    if mode.fresh and mode.auth is None:
        diagnostics.append(
            Diagnostic(
                Severity.ERROR,
                "E-MODE-AUTHVERS",
                mode.span,
                "a fresh channel mode requires an auth agent",
            )
        )

    slots: list[tuple[str, Span, Optional[Edit]]] = []
    if mode.auth is not None:
        slots.append((mode.auth, mode.auth_span, Edit(mode.auth_span, "-", "remove auth agent")))
    for i, (name, span) in enumerate(zip(mode.verifiers, mode.verifier_spans)):
        slots.append((name, span, _remove_verifier_edit(mode, i)))
    if mode.dest is not None:
        slots.append((mode.dest, mode.dest_span, Edit(mode.dest_span, "-", "remove dest agent")))

    for name, span, remove_edit in slots:
        info = table.resolve(name)
        if info is None:
            continue  # already E-UNDECLARED via payload resolution? mode names resolved here
        if info.type is BaseType.AGENT:
            continue
        fixes: list[Edit] = []
        if remove_edit is not None:
            fixes.append(remove_edit)
        if info.decl is not None and len(info.decl.names) == 1 and info.decl.keyword != "Function":
            fixes.append(Edit(info.decl.keyword_span, "Agent", f"declare {name} as Agent"))
        diagnostics.append(
            Diagnostic(
                Severity.ERROR,
                "E-MODE-AGENT",
                span,
                f"channel-mode slots accept only Agent identifiers; {name} is {_type_name(info.type)}",
                tuple(fixes),
            )
        )


def _remove_verifier_edit(mode: TripleMode, index: int) -> Edit:
    spans = mode.verifier_spans
    if len(spans) == 1:
        return Edit(spans[0], "-", "remove verifier")
    if index > 0:
        prev = spans[index - 1]
        target = Span(prev.end, spans[index].end, prev.end_line, prev.end_col, spans[index].end_line, spans[index].end_col)
        return Edit(target, "", "remove verifier")
    nxt = spans[1]
    target = Span(spans[0].start, nxt.start, spans[0].line, spans[0].col, nxt.line, nxt.col)
    return Edit(target, "", "remove verifier")


def _check_goal(
    goal: Goal,
    agent_names: set[str],
    inference: _Inference,
    diagnostics: list[Diagnostic],
) -> None:
    if isinstance(goal, (AuthGoal, WeakAuthGoal)):
        for agent in (goal.verifier, goal.peer):
            if agent not in agent_names:
                diagnostics.append(
                    Diagnostic(
                        Severity.ERROR,
                        "E-GOAL-REF",
                        goal.span,
                        f"goal references {agent}, which is not a declared Agent",
                    )
                )
        inference.infer(goal.term)
    elif isinstance(goal, SecrecyGoal):
        for agent in goal.parties:
            if agent not in agent_names:
                diagnostics.append(
                    Diagnostic(
                        Severity.ERROR,
                        "E-GOAL-REF",
                        goal.span,
                        f"goal references {agent}, which is not a declared Agent",
                    )
                )
        inference.infer(goal.term)


def _check_knowledge(model: ProtocolModel, diagnostics: list[Diagnostic]) -> None:
    declared_in_knowledge: set[str] = set()
    for entry in model.knowledge:
        for term in entry.terms:
            declared_in_knowledge.update(_atom_names(term))

    fn_names: set[str] = set()
    agentish: set[str] = set()
    for decl in model.type_decls:
        if decl.keyword == "Function":
            fn_names.update(decl.names)
        elif decl.keyword == "Agent":
            agentish.update(decl.names)

    macros = {m.name: m for m in model.definitions}

    pools: dict[str, set[Term]] = {}
    for entry in model.knowledge:
        pools[entry.agent] = {_strip_spans(t) for t in entry.terms}

    seen_atoms: set[str] = set(declared_in_knowledge)

    for action in model.actions:
        sender_pool = pools.setdefault(action.sender, set())
        payload = _strip_spans(_expand_macros(action.payload, macros))

        # Fresh values: non-agent, non-function atoms first introduced here
        # are generated by the sender.
        for name in sorted(_atom_names(payload)):
            if name in seen_atoms or name in agentish or name in fn_names:
                continue
            sender_pool.add(Atom(name))
            seen_atoms.add(name)

        known = saturate(sender_pool)
        pools[action.sender] = known
        if not can_derive(payload, known):
            diagnostics.append(
                Diagnostic(
                    Severity.ERROR,
                    "E-KNOWLEDGE",
                    action.span,
                    f"{action.sender} cannot construct the message from its knowledge",
                )
            )
        receiver_pool = pools.setdefault(action.receiver, set())
        receiver_pool.add(payload)
        pools[action.receiver] = saturate(receiver_pool)


def _atom_names(term: Term) -> set[str]:
    names: set[str] = set()

    def walk(t: Term) -> None:
        if isinstance(t, Atom):
            names.add(t.name)
        elif isinstance(t, Apply):
            for a in t.args:
                walk(a)
        elif isinstance(t, (AsymEnc, SymEnc)):
            walk(t.payload)
            walk(t.key)
        elif isinstance(t, Cat):
            for p in t.parts:
                walk(p)

    walk(term)
    return names


def _expand_macros(term: Term, macros: dict[str, Macro], depth: int = 0) -> Term:
    if depth > 16 or not macros:
        return term
    if isinstance(term, Apply) and term.function in macros:
        macro = macros[term.function]
        if len(term.args) == len(macro.params):
            binding = dict(zip(macro.params, term.args))
            return _expand_macros(_substitute(macro.body, binding), macros, depth + 1)
    if isinstance(term, Apply):
        return Apply(term.function, tuple(_expand_macros(a, macros, depth) for a in term.args), span=term.span)
    if isinstance(term, AsymEnc):
        return AsymEnc(_expand_macros(term.payload, macros, depth), _expand_macros(term.key, macros, depth), span=term.span)
    if isinstance(term, SymEnc):
        return SymEnc(_expand_macros(term.payload, macros, depth), _expand_macros(term.key, macros, depth), span=term.span)
    if isinstance(term, Cat):
        return Cat(tuple(_expand_macros(p, macros, depth) for p in term.parts), span=term.span)
    return term


def _substitute(term: Term, binding: dict[str, Term]) -> Term:
    if isinstance(term, Atom):
        return binding.get(term.name, term)
    if isinstance(term, Apply):
        return Apply(term.function, tuple(_substitute(a, binding) for a in term.args), span=term.span)
    if isinstance(term, AsymEnc):
        return AsymEnc(_substitute(term.payload, binding), _substitute(term.key, binding), span=term.span)
    if isinstance(term, SymEnc):
        return SymEnc(_substitute(term.payload, binding), _substitute(term.key, binding), span=term.span)
    if isinstance(term, Cat):
        return Cat(tuple(_substitute(p, binding) for p in term.parts), span=term.span)
    return term
