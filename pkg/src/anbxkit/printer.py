"""Canonical formatting of protocol models.

The layout is byte-deterministic: one declaration per line, two-space
indentation inside sections, single spaces around ``->`` and ``:``, commas
inside terms carry no trailing space, and sections are separated by one
blank line.
"""

from __future__ import annotations

from .model import (
    Action,
    Apply,
    AsymEnc,
    Atom,
    AuthGoal,
    Cat,
    Dialect,
    Goal,
    PlainMode,
    ProtocolModel,
    SecrecyGoal,
    SymEnc,
    Term,
    TripleMode,
    WeakAuthGoal,
)

_INDENT = "  "


def print_term(term: Term) -> str:
    if isinstance(term, Atom):
        return term.name
    if isinstance(term, Apply):
        return f"{term.function}({','.join(print_term(a) for a in term.args)})"
    if isinstance(term, AsymEnc):
        return f"{{{print_term(term.payload)}}}{_key_str(term.key)}"
    if isinstance(term, SymEnc):
        return f"{{|{print_term(term.payload)}|}}{_key_str(term.key)}"
    if isinstance(term, Cat):
        return ",".join(_part_str(p) for p in term.parts)
    raise TypeError(f"unknown term {term!r}")


def _part_str(term: Term) -> str:
    # Nested concatenations need parentheses to survive re-parsing.
    if isinstance(term, Cat):
        return f"({print_term(term)})"
    return print_term(term)


_key_str = _part_str


def print_mode(mode: PlainMode | TripleMode) -> str:
    if isinstance(mode, PlainMode):
        return ""
    slots = [
        mode.auth or "-",
        ",".join(mode.verifiers) if mode.verifiers else "-",
        mode.dest or "-",
    ]
    prefix = "@" if mode.fresh else ""
    return f"{prefix}({'|'.join(slots)})"


def print_goal(goal: Goal) -> str:
    if isinstance(goal, WeakAuthGoal):
        return f"{goal.verifier} weakly authenticates {goal.peer} on {print_term(goal.term)}"
    if isinstance(goal, AuthGoal):
        return f"{goal.verifier} authenticates {goal.peer} on {print_term(goal.term)}"
    if isinstance(goal, SecrecyGoal):
        return f"{_part_str(goal.term)} secret between {','.join(goal.parties)}"
    raise TypeError(f"unknown goal {goal!r}")


def print_action(action: Action) -> str:
    mode = print_mode(action.mode)
    channel = f",{mode}" if mode else ""
    return f"{action.sender} -> {action.receiver}{channel}: {print_term(action.payload)}"


def pretty_print(model: ProtocolModel, dialect: Dialect = Dialect.ANBX) -> str:
    """Render a model in canonical form for the given dialect.

    AnB output spells the symmetric-key keyword ``Symmetric_key`` for
    compatibility with external tools; AnBx output uses ``SymmetricKey``.
    """
    if dialect is Dialect.ANB and any(isinstance(a.mode, TripleMode) for a in model.actions):
        raise ValueError("channel-mode triples cannot be printed in AnB output")

    lines: list[str] = [f"Protocol: {model.name}", ""]

    lines.append("Types:")
    for decl in model.type_decls:
        keyword = decl.keyword
        if dialect is Dialect.ANB and keyword == "SymmetricKey":
            keyword = "Symmetric_key"
        entry = f"{_INDENT}{keyword} {','.join(decl.names)}"
        if decl.signature is not None:
            entry += f": {','.join(decl.signature.params)} -> {decl.signature.result}"
        lines.append(entry)
    if model.certified:
        if dialect is Dialect.ANB:
            raise ValueError("Certified declarations cannot be printed in AnB output")
        lines.append(f"{_INDENT}Certified {','.join(sorted(model.certified))}")
    lines.append("")

    if model.definitions:
        lines.append("Definitions:")
        for macro in model.definitions:
            params = f"({','.join(macro.params)})" if macro.params else ""
            lines.append(f"{_INDENT}{macro.name}{params} = {print_term(macro.body)}")
        lines.append("")

    if model.equations:
        lines.append("Equations:")
        for lhs, rhs in model.equations:
            lines.append(f"{_INDENT}{print_term(lhs)} = {print_term(rhs)}")
        lines.append("")

    lines.append("Knowledge:")
    for entry in model.knowledge:
        lines.append(f"{_INDENT}{entry.agent}: {','.join(_part_str(t) for t in entry.terms)}")
    lines.append("")

    lines.append("Actions:")
    for action in model.actions:
        lines.append(f"{_INDENT}{print_action(action)}")

    if model.goals:
        lines.append("")
        lines.append("Goals:")
        for goal in model.goals:
            lines.append(f"{_INDENT}{print_goal(goal)}")

    return "\n".join(lines) + "\n"
