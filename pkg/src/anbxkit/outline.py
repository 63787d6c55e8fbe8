"""Structural outline of a parsed protocol model."""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import EMPTY_SPAN, ProtocolModel, Span
from .printer import print_action, print_goal


@dataclass
class OutlineNode:
    label: str
    span: Span = EMPTY_SPAN
    children: list["OutlineNode"] = field(default_factory=list)


def outline(model: ProtocolModel) -> OutlineNode:
    """One root node per present section; entries mirror the model's lists."""
    root = OutlineNode(model.name, model.span)

    types = OutlineNode("Types", _covering([d.span for d in model.type_decls]))
    for decl in model.type_decls:
        types.children.append(OutlineNode(f"{decl.keyword} {','.join(decl.names)}", decl.span))
    root.children.append(types)

    if model.definitions:
        defs = OutlineNode("Definitions", _covering([m.span for m in model.definitions]))
        for macro in model.definitions:
            defs.children.append(OutlineNode(macro.name, macro.span))
        root.children.append(defs)

    if model.equations:
        eqs = OutlineNode("Equations", _covering([_merge(l.span, r.span) for l, r in model.equations]))
        for lhs, rhs in model.equations:
            eqs.children.append(OutlineNode("equation", _merge(lhs.span, rhs.span)))
        root.children.append(eqs)

    knowledge = OutlineNode("Knowledge", _covering([k.span for k in model.knowledge]))
    for entry in model.knowledge:
        knowledge.children.append(OutlineNode(entry.agent, entry.span))
    root.children.append(knowledge)

    actions = OutlineNode("Actions", _covering([a.span for a in model.actions]))
    for action in model.actions:
        actions.children.append(OutlineNode(print_action(action), action.span))
    root.children.append(actions)

    if model.goals:
        goals = OutlineNode("Goals", _covering([g.span for g in model.goals]))
        for goal in model.goals:
            goals.children.append(OutlineNode(print_goal(goal), goal.span))
        root.children.append(goals)

    return root


def _covering(spans: list[Span]) -> Span:
    if not spans:
        return EMPTY_SPAN
    first, last = spans[0], spans[-1]
    return Span(first.start, last.end, first.line, first.col, last.end_line, last.end_col)


def _merge(a: Span, b: Span) -> Span:
    return Span(a.start, b.end, a.line, a.col, b.end_line, b.end_col)
