"""Output classification: rule sets, markers, and colourable spans."""

from __future__ import annotations

import pytest

from anbxkit.classify import (
    Verdict,
    classify_output,
    classify_spans,
    goal_from_protocol_name,
    load_rule_set,
)
from anbxkit.mock_verifier import MockScript, run_mock_verifier


def test_ofmc_verdicts():
    assert classify_output("ofmc", "SUMMARY\nNO_ATTACK_FOUND\n", 0).verdict is Verdict.SAFE
    assert classify_output("ofmc", "SUMMARY\nATTACK_FOUND\nTRACE...\n", 0).verdict is Verdict.ATTACK


def test_ofmc_safe_rule_precedes_attack_rule():
    # A safe summary whose trace section mentions the attack marker.
    text = "NO_ATTACK_FOUND\nnotes: would print ATTACK_FOUND otherwise\n"
    assert classify_output("ofmc", text, 0).verdict is Verdict.SAFE


def test_proverif_verdicts():
    assert classify_output("proverif", "RESULT secrecy is true.\n", 0).verdict is Verdict.SAFE
    assert classify_output("proverif", "RESULT auth is false.\n", 0).verdict is Verdict.ATTACK
    assert (
        classify_output("proverif", "RESULT weak auth cannot be proved.\n", 0).verdict
        is Verdict.INCONCLUSIVE
    )


def test_unmatched_output_falls_back_on_exit_code():
    assert classify_output("ofmc", "gibberish\n", 1).verdict is Verdict.TOOL_ERROR
    assert classify_output("ofmc", "gibberish\n", 0).verdict is Verdict.INCONCLUSIVE
    assert classify_output("unknown-tool", "anything\n", 0).verdict is Verdict.SAFE  # generic default


def test_goal_and_session_markers_extracted():
    text = "mock verifier\nGOAL goal3\nSESSIONS 2\nATTACK_FOUND\n"
    outcome = classify_output("mock", text, 0)
    assert outcome.goal_name == "goal3"
    assert outcome.sessions == 2
    assert outcome.verdict is Verdict.ATTACK
    assert "ATTACK_FOUND" in outcome.excerpt


def test_goal_inferred_from_protocol_name():
    outcome = classify_output("ofmc", "NO_ATTACK_FOUND\n", 0, protocol_name="NSPK_goal2")
    assert outcome.goal_name == "goal2"
    assert goal_from_protocol_name("NSPK") is None


def test_rule_set_file_round_trip(tmp_path):
    rules = tmp_path / "rules.tsv"
    rules.write_text("# comment\nSafe\tALL GOOD\nAttack\tBREACH\n")
    rs = load_rule_set(rules)
    assert classify_output("x", "BREACH\n", 0, rule_sets={"x": rs}).verdict is Verdict.ATTACK
    assert classify_output("x", "ALL GOOD\n", 0, rule_sets={"x": rs}).verdict is Verdict.SAFE


def test_rule_set_rejects_timeout_rules(tmp_path):
    rules = tmp_path / "rules.tsv"
    rules.write_text("Timeout\tTOO SLOW\n")
    with pytest.raises(ValueError):
        load_rule_set(rules)


def test_classify_spans_colour_classes():
    text = "start NO_ATTACK_FOUND middle ATTACK_FOUND end\n"
    spans = classify_spans("mock", text)
    classes = [s["cls"] for s in spans]
    assert classes == ["safe", "attack"]
    for s in spans:
        assert 0 <= s["start"] < s["end"] <= len(text)


# -- mock verifier loop-back -------------------------------------------------


@pytest.mark.parametrize("verdict", [Verdict.SAFE, Verdict.ATTACK, Verdict.INCONCLUSIVE])
def test_mock_output_classifies_back_to_scripted_class(verdict):
    script = MockScript.parse(f"class={verdict.value}\n")
    text, code = run_mock_verifier(script, goal="goal1", sleep=lambda _t: None)
    outcome = classify_output("mock", text, code, protocol_name="P_goal1")
    assert outcome.verdict is verdict
    assert outcome.goal_name == "goal1"


def test_mock_garbage_is_tool_error():
    script = MockScript.parse("garbage=true\n")
    text, code = run_mock_verifier(script, sleep=lambda _t: None)
    assert classify_output("mock", text, code).verdict is Verdict.TOOL_ERROR


def test_mock_per_goal_overrides():
    script = MockScript.parse("class=Safe\ngoal2_class=Attack\ngoal2_delay_ms=0\n")
    text, _ = run_mock_verifier(script, goal="goal2", sleep=lambda _t: None)
    assert classify_output("mock", text, 0).verdict is Verdict.ATTACK
    text, _ = run_mock_verifier(script, goal="goal1", sleep=lambda _t: None)
    assert classify_output("mock", text, 0).verdict is Verdict.SAFE
