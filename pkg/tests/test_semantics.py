"""Scoping, typing, quick fixes, and knowledge constructibility."""

from __future__ import annotations

import pytest

from anbxkit.model import Dialect, Severity
from anbxkit.parser import parse_text
from anbxkit.semantics import (
    BaseType,
    builtin_signatures,
    infer_term_type,
    nearest_name,
    resolve_scopes,
    validate,
)

from .conftest import fixture_text


def _model(src: str, dialect: Dialect = Dialect.ANBX):
    result = parse_text(src, dialect)
    assert result.model is not None, [d.render() for d in result.diagnostics]
    return result.model


def _wrap(types: str, knowledge: str, action: str, goals: str = "  Msg secret between A,B") -> str:
    return (
        f"Protocol: T\n\nTypes:\n{types}\n\nKnowledge:\n{knowledge}\n\n"
        f"Actions:\n{action}\n\nGoals:\n{goals}\n"
    )


# -- builtins ---------------------------------------------------------------


def test_builtin_signatures():
    sigs = builtin_signatures()
    assert sigs["pk"].params == (BaseType.AGENT,)
    assert sigs["pk"].result is BaseType.PUBKEY
    assert sigs["sk"].result is BaseType.PUBKEY
    assert sigs["inv"].params == (BaseType.PUBKEY,)
    assert sigs["inv"].result is BaseType.PRIVKEY
    assert sigs["hash"].result is BaseType.NUMBER
    assert sigs["exp"].params == (BaseType.PAYLOAD, BaseType.PAYLOAD)
    assert sigs["xor"].result is BaseType.PAYLOAD


def test_builtin_typing_in_context():
    model = _model(fixture_text("NSPK.AnB"), Dialect.ANB)
    table, diags = resolve_scopes(model)
    assert diags == []
    ty, term_diags = infer_term_type(table, model.actions[0].payload)
    assert term_diags == []
    assert ty is BaseType.PAYLOAD
    key_ty, _ = infer_term_type(table, model.actions[0].payload.key)
    assert key_ty is BaseType.PUBKEY


# -- scope resolution -------------------------------------------------------


def test_undeclared_with_nearest_name_fix():
    src = _wrap("  Agent A,B\n  Number Msg", "  A: A,B,Msg\n  B: A,B", "  A -> B: Mgs")
    model = _model(src)
    diags = [d for d in validate(model) if d.code == "E-UNDECLARED"]
    assert len(diags) == 1
    assert len(diags[0].fixes) == 1
    fixed = diags[0].fixes[0].apply(src)
    assert "Mgs" not in fixed
    refreshed = validate(_model(fixed))
    assert not any(d.code == "E-UNDECLARED" for d in refreshed)


def test_nearest_name_tie_breaks_by_declaration_order():
    assert nearest_name("Na", ["NA", "NB"]) == "NA"
    assert nearest_name("Nx", ["NA", "NB"]) == "NA"  # equal distance, first declared wins


def test_redeclaration_reported():
    src = _wrap("  Agent A,B\n  Number Msg\n  Agent Msg", "  A: A,B,Msg\n  B: A,B", "  A -> B: Msg")
    assert any(d.code == "E-REDECLARED" for d in validate(_model(src)))


def test_macro_parameters_scope_only_inside_macro():
    model = _model(fixture_text("Macros.AnBx"))
    assert validate(model) == []
    # The same parameter name outside a macro body is undeclared.
    bad = fixture_text("Macros.AnBx").replace("A -> B: wrap(N2)", "A -> B: X")
    diags = validate(_model(bad))
    assert any(d.code == "E-UNDECLARED" for d in diags)


# -- function application typing --------------------------------------------


def test_arity_mismatch():
    src = _wrap("  Agent A,B\n  Number Msg", "  A: A,B,Msg\n  B: A,B", "  A -> B: inv(Msg,Msg)")
    diags = validate(_model(src))
    assert any(d.code == "E-ARITY" for d in diags)


def test_argument_type_mismatch_positional():
    src = _wrap("  Agent A,B\n  Number Msg", "  A: A,B,Msg\n  B: A,B", "  A -> B: pk(Msg)")
    diags = [d for d in validate(_model(src)) if d.code == "E-ARGTYPE"]
    assert len(diags) == 1
    assert "argument 1" in diags[0].message


def test_declared_function_signature_checked():
    src = _wrap(
        "  Agent A,B\n  Number Msg\n  Function log: Agent,Number -> Number",
        "  A: A,B,Msg\n  B: A,B",
        "  A -> B: log(Msg,A)",
    )
    diags = [d for d in validate(_model(src)) if d.code == "E-ARGTYPE"]
    assert len(diags) == 2  # both positions wrong


# -- encryption key typing: key type x cipher truth table --------------------

KEY_CASES = [
    ("Agent", "K2", False, False),
    ("Number", "K2", False, False),
    ("SymmetricKey", "K2", True, False),
    ("PublicKey", "K2", False, True),
]


@pytest.mark.parametrize("keyword,key,sym_ok,asym_ok", KEY_CASES)
@pytest.mark.parametrize("cipher", ["sym", "asym"])
def test_cipher_key_truth_table(keyword, key, sym_ok, asym_ok, cipher):
    term = f"{{|Msg|}}{key}" if cipher == "sym" else f"{{Msg}}{key}"
    src = _wrap(
        f"  Agent A,B\n  Number Msg\n  {keyword} {key}",
        f"  A: A,B,Msg,{key}\n  B: A,B,{key}",
        f"  A -> B: {term}",
    )
    diags = validate(_model(src))
    expected_ok = sym_ok if cipher == "sym" else asym_ok
    code = "E-SYMKEY" if cipher == "sym" else "E-ASYMKEY"
    if expected_ok:
        assert not any(d.code == code for d in diags)
    else:
        assert any(d.code == code for d in diags)


def test_private_key_accepted_for_asymmetric():
    src = _wrap(
        "  Agent A,B\n  Number Msg",
        "  A: A,B,Msg,inv(pk(A))\n  B: A,B",
        "  A -> B: {Msg}inv(pk(A))",
    )
    assert not any(d.code == "E-ASYMKEY" for d in validate(_model(src)))


def test_symkey_quick_fixes_each_remove_diagnostic():
    src = fixture_text("ModeAgentFixture.AnBx")
    diags = validate(_model(src))
    symkey = [d for d in diags if d.code == "E-SYMKEY"]
    assert len(symkey) == 1 and len(symkey[0].fixes) == 2
    for fix in symkey[0].fixes:
        fixed_src = fix.apply(src)
        fixed_diags = validate(_model(fixed_src))
        assert not any(d.code == "E-SYMKEY" for d in fixed_diags)


# -- channel modes ----------------------------------------------------------


def test_mode_agent_quick_fixes_each_remove_diagnostic():
    src = fixture_text("ModeAgentFixture.AnBx")
    diags = validate(_model(src))
    mode = [d for d in diags if d.code == "E-MODE-AGENT"]
    assert len(mode) == 1 and len(mode[0].fixes) == 2
    for fix in mode[0].fixes:
        fixed_src = fix.apply(src)
        fixed_diags = validate(_model(fixed_src))
        assert not any(d.code == "E-MODE-AGENT" for d in fixed_diags)


def test_mode_auth_verifier_pairing():
    diags = validate(_model(fixture_text("AuthVersFixture.AnBx")))
    assert [d.code for d in diags] == ["E-MODE-AUTHVERS"]


def test_fresh_mode_requires_auth():
    src = _wrap(
        "  Agent A,B\n  Number Msg\n  Certified A,B",
        "  A: A,B,Msg\n  B: A,B",
        "  A -> B,@(-|-|B): Msg",
    )
    diags = validate(_model(src))
    assert any(d.code == "E-MODE-AUTHVERS" for d in diags)


def test_uncertified_mode_agent_warns():
    src = _wrap(
        "  Agent A,B\n  Number Msg",
        "  A: A,B,Msg\n  B: A,B",
        "  A -> B,@(A|B|B): Msg",
    )
    diags = validate(_model(src))
    warnings = [d for d in diags if d.code == "W-UNCERTIFIED"]
    assert warnings and all(d.severity is Severity.WARNING for d in warnings)


# -- goals and knowledge ----------------------------------------------------


def test_goal_reference_checked():
    src = _wrap(
        "  Agent A,B\n  Number Msg",
        "  A: A,B,Msg\n  B: A,B",
        "  A -> B: Msg",
        "  Msg secret between A,C",
    )
    assert any(d.code == "E-GOAL-REF" for d in validate(_model(src)))


def test_knowledge_constructibility_flags_unknown_payload():
    # B never learns Secret but tries to send it.
    src = _wrap(
        "  Agent A,B\n  Number Msg,Secret",
        "  A: A,B,Msg,Secret\n  B: A,B",
        "  A -> B: {Msg}pk(B)\n  B -> A: Secret",
        "  Secret secret between A,B",
    )
    diags = validate(_model(src))
    assert any(d.code == "E-KNOWLEDGE" for d in diags)


def test_receiver_learns_by_decryption():
    # B can decrypt with inv(pk(B)) and re-send the learned value.
    src = _wrap(
        "  Agent A,B\n  Number Msg",
        "  A: A,B,Msg,pk\n  B: A,B,pk,inv(pk(B))",
        "  A -> B: {Msg}pk(B)\n  B -> A: hash(Msg)",
    )
    assert not any(d.code == "E-KNOWLEDGE" for d in validate(_model(src)))


def test_validate_is_deterministic_and_ordered():
    src = fixture_text("ModeAgentFixture.AnBx")
    a = validate(_model(src))
    b = validate(_model(src))
    assert [(d.code, d.span.start) for d in a] == [(d.code, d.span.start) for d in b]
    starts = [d.span.start for d in a]
    assert starts == sorted(starts)
