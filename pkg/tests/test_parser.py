"""Parser, pretty printer, and outline: structure, spans, and robustness."""

from __future__ import annotations

import os
import random
import time
from pathlib import Path

import pytest

from anbxkit.model import (
    Apply,
    AsymEnc,
    Atom,
    Cat,
    Dialect,
    Severity,
    SourceFile,
    SymEnc,
    TripleMode,
)
from anbxkit.outline import outline
from anbxkit.parser import parse, parse_text
from anbxkit.printer import pretty_print, print_term

from .conftest import FIXTURES, fixture_text

CORPUS = sorted(FIXTURES.glob("*.AnB*"))


def _dialect(path: Path) -> Dialect:
    return Dialect.ANBX if path.suffix.lower() == ".anbx" else Dialect.ANB


# -- round trip -------------------------------------------------------------


@pytest.mark.parametrize("path", CORPUS, ids=lambda p: p.name)
def test_round_trip_model_stable(path: Path):
    """parse -> print -> parse yields the same model; print is idempotent."""
    first = parse(SourceFile.from_path(path))
    assert first.model is not None
    printed = pretty_print(first.model, _dialect(path))
    second = parse_text(printed, _dialect(path))
    assert second.model is not None
    assert second.model == first.model
    assert pretty_print(second.model, _dialect(path)) == printed


def test_term_surface_forms():
    src = fixture_text("NSPK.AnB")
    model = parse_text(src, Dialect.ANB).model
    assert model is not None
    first_payload = model.actions[0].payload
    assert isinstance(first_payload, AsymEnc)
    assert isinstance(first_payload.payload, Cat)
    assert first_payload.payload.parts == (Atom("NA"), Atom("A"))
    assert first_payload.key == Apply("pk", (Atom("B"),))
    assert print_term(first_payload) == "{NA,A}pk(B)"


def test_symmetric_encryption_and_mode():
    model = parse_text(fixture_text("FreshExchange.AnBx"), Dialect.ANBX).model
    assert model is not None
    mode = model.actions[0].mode
    assert isinstance(mode, TripleMode)
    assert mode.fresh and mode.auth == "A" and mode.verifiers == ("B",) and mode.dest == "B"
    sym = model.actions[1].payload
    assert isinstance(sym, SymEnc)
    assert print_term(sym) == "{|Msg|}K"


def test_spans_point_into_source():
    src = fixture_text("NSPK.AnB")
    model = parse_text(src, Dialect.ANB).model
    assert model is not None
    for action in model.actions:
        text = src[action.payload.span.start : action.payload.span.end]
        assert text.strip() != ""
        # The span's text re-parses to the same term shape via an action wrapper.
        assert action.payload.span.line >= 1
    brief = model.actions[0].span.brief()
    assert ":" in brief and "-" in brief


# -- sections and dialect rules ---------------------------------------------


def test_missing_section_reported():
    res = parse_text("Protocol: P\n\nTypes:\n  Agent A,B\n", Dialect.ANB)
    codes = [d.code for d in res.diagnostics]
    assert "E-SECTION-MISSING" in codes


def test_section_order_enforced():
    src = (
        "Protocol: P\n\nKnowledge:\n  A: A\n\nTypes:\n  Agent A,B\n\n"
        "Actions:\n  A -> B: A\n\nGoals:\n  A secret between A,B\n"
    )
    res = parse_text(src, Dialect.ANB)
    assert any(d.code in ("E-SECTION-ORDER", "E-SECTION-MISSING", "E-PARSE") for d in res.diagnostics)


def test_goalless_protocol_warns_but_parses():
    src = (
        "Protocol: P\n\nTypes:\n  Agent A,B\n  Number N\n\n"
        "Knowledge:\n  A: A,B\n  B: A,B\n\nActions:\n  A -> B: N\n\nGoals:\n"
    )
    res = parse_text(src, Dialect.ANB)
    assert res.model is not None
    warnings = [d for d in res.diagnostics if d.code == "W-NO-GOALS"]
    assert len(warnings) == 1
    assert warnings[0].severity is Severity.WARNING


def test_anb_dialect_rejects_certified_and_modes():
    certified = fixture_text("ModeAgentFixture.AnBx")
    res = parse_text(certified, Dialect.ANB)
    assert any(d.code == "E-DIALECT" for d in res.diagnostics)


def test_comments_ignored():
    src = fixture_text("NSPK.AnB")
    commented = "# leading comment\n" + src.replace(
        "Actions:", "# mid comment\nActions:"
    )
    assert parse_text(commented, Dialect.ANB).model == parse_text(src, Dialect.ANB).model


# -- outline ----------------------------------------------------------------


def test_outline_mirrors_sections():
    model = parse_text(fixture_text("Macros.AnBx"), Dialect.ANBX).model
    assert model is not None
    root = outline(model)
    assert root.label == model.name
    labels = [n.label for n in root.children]
    assert labels == ["Types", "Definitions", "Equations", "Knowledge", "Actions", "Goals"]
    by_label = {n.label: n for n in root.children}
    assert len(by_label["Actions"].children) == len(model.actions)
    assert len(by_label["Goals"].children) == len(model.goals)
    assert len(by_label["Definitions"].children) == len(model.definitions)


# -- total-function robustness ----------------------------------------------


def test_parse_never_raises_on_mutations():
    """Fuzz: random corpus mutations never crash the parser.

    Budget via ANBX_FUZZ_SECONDS (default 2 s for quick runs).
    """
    budget = float(os.environ.get("ANBX_FUZZ_SECONDS", "2"))
    rng = random.Random(20250825)
    corpus = [p.read_text(encoding="utf-8") for p in CORPUS]
    alphabet = "{}()|@,->:;.#ABxyz \n\t"
    deadline = time.monotonic() + budget
    iterations = 0
    while time.monotonic() < deadline:
        base = rng.choice(corpus)
        chars = list(base)
        for _ in range(rng.randrange(1, 12)):
            op = rng.randrange(3)
            pos = rng.randrange(len(chars) + 1) if chars else 0
            if op == 0 and chars:
                del chars[min(pos, len(chars) - 1)]
            elif op == 1:
                chars.insert(pos, rng.choice(alphabet))
            elif chars:
                chars[min(pos, len(chars) - 1)] = rng.choice(alphabet)
        mutated = "".join(chars)
        dialect = rng.choice((Dialect.ANB, Dialect.ANBX))
        result = parse_text(mutated, dialect)  # must not raise
        assert result.model is not None or result.diagnostics
        iterations += 1
    assert iterations > 0
