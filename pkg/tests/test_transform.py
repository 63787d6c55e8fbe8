"""Channel-mode lowering and goal splitting."""

from __future__ import annotations

import pytest

from anbxkit.model import Apply, AsymEnc, Atom, Cat, Dialect, PlainMode
from anbxkit.parser import parse_text
from anbxkit.printer import pretty_print, print_term
from anbxkit.semantics import validate
from anbxkit.transform import LoweringError, compile_channels, split_goals

from .conftest import fixture_text


def _model(src: str, dialect: Dialect = Dialect.ANBX):
    result = parse_text(src, dialect)
    assert result.model is not None, [d.render() for d in result.diagnostics]
    return result.model


def _pk(agent: str) -> Apply:
    return Apply("pk", (Atom(agent),))


def _sign(payload, agent: str) -> AsymEnc:
    return AsymEnc(payload, Apply("inv", (Apply("sk", (Atom(agent),)),)))


# -- fresh (challenge-response) lowering ------------------------------------


def test_fresh_mode_lowers_to_challenge_response():
    model = _model(fixture_text("FreshExchange.AnBx"))
    lowered = compile_channels(model)

    # One extra action: the challenge precedes the original exchange.
    assert len(lowered.actions) == len(model.actions) + 1
    challenge, response = lowered.actions[0], lowered.actions[1]

    # Challenge: receiver sends {receiver, N}pk(auth) back to the sender.
    assert (challenge.sender, challenge.receiver) == ("B", "A")
    assert isinstance(challenge.mode, PlainMode)
    assert isinstance(challenge.payload, AsymEnc)
    assert challenge.payload.key == _pk("A")
    assert isinstance(challenge.payload.payload, Cat)
    nonce = challenge.payload.payload.parts[1]
    assert challenge.payload.payload.parts[0] == Atom("B")

    # Response: {{N, payload}inv(sk(auth))}pk(dest).
    assert (response.sender, response.receiver) == ("A", "B")
    expected = AsymEnc(_sign(Cat((nonce, Atom("K"))), "A"), _pk("B"))
    assert response.payload == expected

    # Untouched actions are preserved verbatim (modulo span identity).
    assert [print_term(a.payload) for a in lowered.actions[2:]] == [
        print_term(a.payload) for a in model.actions[1:]
    ]


def test_lowered_output_is_valid_anb():
    lowered = compile_channels(_model(fixture_text("FreshExchange.AnBx")))
    text = pretty_print(lowered, Dialect.ANB)
    reparsed = parse_text(text, Dialect.ANB)
    assert reparsed.model is not None
    diags = validate(reparsed.model, Dialect.ANB)
    assert [d.render() for d in diags] == []


def test_lowering_declares_generated_nonces():
    lowered = compile_channels(_model(fixture_text("FreshExchange.AnBx")))
    declared = [n for d in lowered.type_decls for n in d.names]
    assert "Nonce1" in declared
    assert lowered.certified == ()


def test_nonce_names_avoid_collisions():
    src = fixture_text("FreshExchange.AnBx").replace("Number Msg", "Number Msg,Nonce1")
    src = src.replace("{|Msg|}K", "{|Msg,Nonce1|}K").replace(
        "A: A,B", "A: A,B", 1
    )
    model = _model(src.replace("B -> A: {|Msg|}K", "B -> A: {|Msg,Nonce1|}K"))
    lowered = compile_channels(model)
    names = [n for d in lowered.type_decls for n in d.names]
    assert len(names) == len(set(names))  # generated name dodged the declared Nonce1


def test_certified_knowledge_augmented():
    lowered = compile_channels(_model(fixture_text("FreshExchange.AnBx")))
    know = {k.agent: k.terms for k in lowered.knowledge}
    for agent in ("A", "B"):
        terms = know[agent]
        assert Atom("pk") in terms and Atom("sk") in terms
        assert Apply("inv", (Apply("pk", (Atom(agent),)),)) in terms
        assert Apply("inv", (Apply("sk", (Atom(agent),)),)) in terms


# -- non-fresh lowering ------------------------------------------------------


def _plain_mode_protocol(mode: str) -> str:
    return (
        "Protocol: P\n\nTypes:\n  Agent A,B,C\n  Number Msg\n  Certified A,B,C\n\n"
        "Knowledge:\n  A: A,B,C,Msg\n  B: A,B,C\n\n"
        f"Actions:\n  A -> B,{mode}: Msg\n\nGoals:\n  Msg secret between A,B\n"
    )


def test_nonfresh_with_dest_signs_then_encrypts():
    lowered = compile_channels(_model(_plain_mode_protocol("(A|B|B)")))
    assert len(lowered.actions) == 1
    payload = lowered.actions[0].payload
    assert payload == AsymEnc(_sign(Cat((Atom("B"), Atom("Msg"))), "A"), _pk("B"))


def test_nonfresh_without_dest_signs_only():
    lowered = compile_channels(_model(_plain_mode_protocol("(A|B|-)")))
    payload = lowered.actions[0].payload
    assert payload == _sign(Cat((Atom("B"), Atom("Msg"))), "A")


def test_goals_copied_verbatim():
    model = _model(fixture_text("FreshExchange.AnBx"))
    lowered = compile_channels(model)
    assert lowered.goals == model.goals


# -- lowering errors ---------------------------------------------------------


def test_multiple_verifiers_rejected():
    with pytest.raises(LoweringError) as exc:
        compile_channels(_model(_plain_mode_protocol("(A|B,C|B)")))
    assert exc.value.code == "E-LOWER-MULTIVERS"


def test_fresh_without_dest_rejected():
    with pytest.raises(LoweringError) as exc:
        compile_channels(_model(_plain_mode_protocol("@(A|B|-)")))
    assert exc.value.code == "E-LOWER-NODEST"


def test_uncertified_agent_rejected():
    src = _plain_mode_protocol("(A|B|B)").replace("Certified A,B,C", "Certified B,C")
    with pytest.raises(LoweringError) as exc:
        compile_channels(_model(src))
    assert exc.value.code == "E-LOWER-UNCERTIFIED"


# -- goal splitting ----------------------------------------------------------


def test_split_goals_properties():
    model = _model(fixture_text("FreshExchange.AnBx"))
    variants = split_goals(model)
    assert len(variants) == len(model.goals) == 6
    for i, variant in enumerate(variants, start=1):
        assert variant.name == f"{model.name}_goal{i}"
        assert len(variant.goals) == 1
        # Non-goal sections are structurally identical.
        assert variant.type_decls == model.type_decls
        assert variant.knowledge == model.knowledge
        assert variant.actions == model.actions
        assert variant.definitions == model.definitions
        assert variant.equations == model.equations
    # Goal-list concatenation reproduces the original.
    assert tuple(g for v in variants for g in v.goals) == model.goals


def test_split_goals_requires_goals():
    src = (
        "Protocol: P\n\nTypes:\n  Agent A,B\n  Number Msg\n\n"
        "Knowledge:\n  A: A,B,Msg\n  B: A,B\n\nActions:\n  A -> B: Msg\n\nGoals:\n"
    )
    model = _model(src, Dialect.ANB)
    with pytest.raises(LoweringError) as exc:
        split_goals(model)
    assert exc.value.code == "E-NO-GOALS"
