"""AnBx-to-AnB channel lowering and single-goal protocol splitting."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .model import (
    Action,
    Apply,
    AsymEnc,
    Atom,
    Cat,
    Knowledge,
    PLAIN,
    ProtocolModel,
    Term,
    TripleMode,
    TypeDecl,
)


class LoweringError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class LoweringContext:
    source: ProtocolModel
    counter: int = 0
    generated: list[str] = field(default_factory=list)
    _taken: set[str] = field(default_factory=set)

    def __post_init__(self) -> None:
        self._taken = set(self.source.declared_names())
        for entry in self.source.knowledge:
            self._taken.add(entry.agent)

    def fresh_nonce(self) -> str:
        while True:
            self.counter += 1
            name = f"Nonce{self.counter}"
            if name not in self._taken:
                self._taken.add(name)
                self.generated.append(name)
                return name


def _pk(agent: str) -> Term:
    return Apply("pk", (Atom(agent),))


def _sign_key(agent: str) -> Term:
    return Apply("inv", (Apply("sk", (Atom(agent),)),))


def _pair(*parts: Term) -> Term:
    return Cat(tuple(parts))


def compile_channels(model: ProtocolModel) -> ProtocolModel:
    """Lower every channel-mode triple to plain challenge-response actions.

    The output carries no Certified section and no triple modes; certified
    agents' knowledge gains the key material they would hold under a PKI.
    """
    certified = set(model.certified)
    ctx = LoweringContext(model)
    actions: list[Action] = []

    for action in model.actions:
        mode = action.mode
        if not isinstance(mode, TripleMode):
            actions.append(action)
            continue
        if len(mode.verifiers) > 1:
            raise LoweringError(
                "E-LOWER-MULTIVERS",
                f"cannot lower a mode with {len(mode.verifiers)} verifiers",
            )
        if mode.auth is None or not mode.verifiers:
            raise LoweringError(
                "E-LOWER-UNCERTIFIED",
                "cannot lower a mode without auth and verifier agents",
            )
        involved = [a for a in (mode.auth, *mode.verifiers, mode.dest) if a is not None]
        for agent in involved:
            if agent not in certified:
                raise LoweringError(
                    "E-LOWER-UNCERTIFIED",
                    f"channel mode references {agent}, which is not Certified",
                )
        auth = mode.auth
        verifier = mode.verifiers[0]
        sender, receiver = action.sender, action.receiver
        payload = action.payload

        if mode.fresh:
            if mode.dest is None:
                raise LoweringError(
                    "E-LOWER-NODEST",
                    "a fresh channel mode requires a dest agent",
                )
            nonce = Atom(ctx.fresh_nonce())
            challenge = AsymEnc(_pair(Atom(receiver), nonce), _pk(auth))
            response = AsymEnc(AsymEnc(_pair(nonce, payload), _sign_key(auth)), _pk(mode.dest))
            actions.append(Action(receiver, sender, PLAIN, challenge, span=action.span))
            actions.append(Action(sender, receiver, PLAIN, response, span=action.span))
        else:
            signed = AsymEnc(_pair(Atom(verifier), payload), _sign_key(auth))
            message = AsymEnc(signed, _pk(mode.dest)) if mode.dest is not None else signed
            actions.append(Action(sender, receiver, PLAIN, message, span=action.span))

    type_decls = list(model.type_decls)
    if ctx.generated:
        type_decls.append(TypeDecl("Number", tuple(ctx.generated)))

    knowledge: list[Knowledge] = []
    for entry in model.knowledge:
        terms = list(entry.terms)
        if entry.agent in certified:
            for extra in (
                Atom("pk"),
                Atom("sk"),
                Apply("inv", (_pk(entry.agent),)),
                _sign_key(entry.agent),
            ):
                if extra not in terms:
                    terms.append(extra)
        knowledge.append(Knowledge(entry.agent, tuple(terms), span=entry.span))

    return ProtocolModel(
        name=model.name,
        type_decls=tuple(type_decls),
        certified=(),
        knowledge=tuple(knowledge),
        definitions=model.definitions,
        equations=model.equations,
        actions=tuple(actions),
        goals=model.goals,
        span=model.span,
    )


def split_goals(model: ProtocolModel) -> list[ProtocolModel]:
    """One model per goal; model ``i`` keeps only ``goals[i]`` and is named
    ``<name>_goal<i>`` (1-based)."""
    if not model.goals:
        raise LoweringError("E-NO-GOALS", f"{model.name} declares no goals to split")
    return [
        replace(model, name=f"{model.name}_goal{i}", goals=(goal,))
        for i, goal in enumerate(model.goals, start=1)
    ]
