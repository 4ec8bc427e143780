from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from dangerinv import corpus, load, parse, pretty
from dangerinv.errors import ParseError, UnsupportedFeature, WidthError
from dangerinv.generate import random_program
from dangerinv.interp import Interpreter, loop_traces
from dangerinv.syntax import Assign, Block, If, NONDET


def test_fig4a_ast():
    p = parse(corpus.program_text("fig4a"))
    assert [d.name for d in p.decls] == ["x", "y"]
    assert str(p.guard) == "x < 1000000"
    assert len(p.body.stmts) == 2
    assert isinstance(p.body.stmts[0], Assign)
    inc_y = p.body.stmts[1]
    assert isinstance(inc_y, If) and inc_y.cond is NONDET
    assert str(p.final_assert) == "x == y"


def test_empty_body():
    p = parse("int x = 0; assume(true); while (x < 1) { } assert(true);")
    assert isinstance(p.body, Block) and p.body.stmts == ()


def test_missing_paren_reports_position_and_expected():
    with pytest.raises(ParseError) as ei:
        parse("while x < 1 {")
    e = ei.value
    assert (e.line, e.col) == (1, 7)
    assert "(" in e.expected


@pytest.mark.parametrize("text", [
    "int a; while (a < 1) { a[0] = 1; }",
    "int x = 0; while (x < 1) { while (x < 2) { x++; } }",
    "int x = 0; while (x < 1) { f(x); }",
    "int x = 0; while (x < 1) { x++; } while (x < 2) { x++; }",
])
def test_unsupported_features(text):
    with pytest.raises(UnsupportedFeature):
        parse(text)


def test_undeclared_variable_rejected():
    with pytest.raises(ParseError):
        parse("int x = 0; while (x < 1) { y = 1; }")


def test_wide_literal_needs_subst():
    text = corpus.program_text("fig4a")
    with pytest.raises(WidthError, match="--subst 1000000="):
        load(text, 8)
    L = load(text, 8, {1000000: 16})
    assert str(L.guard) == "x < 16"


def test_fig3b_break_desugaring():
    L = corpus.program("fig3b")
    assert L.vars == ("x", "brk")
    assert str(L.guard) == "x < 10 && brk == 0"
    assert [s.name for s in L.sites] == ["n1"]
    assert L.sites[0].bits == 1
    assert "brk" in L.driven_vars


def test_nondet_free_program_has_no_sites():
    assert corpus.program("fig3c").sites == ()


def test_fig4e_error_latch_matches_interpreter():
    text = corpus.program_text("fig4e")
    L = load(text, 4)
    assert "err" in L.vars and L.source_vars == ("x", "len", "i")
    assert Interpreter(parse(text), 4).traces(20) == loop_traces(L, 20)


@pytest.mark.parametrize("name", ["fig3a", "fig3b", "fig3c", "fig4a", "fig4b", "fig4c", "fig7"])
def test_corpus_round_trip(name):
    p = parse(corpus.program_text(name))
    assert parse(pretty(p)) == p


@given(st.integers(0, 10_000), st.sampled_from([3, 4]))
def test_round_trip_random_programs(seed, width):
    p = parse(random_program(seed, width=width))
    assert parse(pretty(p)) == p
    assert pretty(parse(pretty(p))) == pretty(p)


@given(st.integers(0, 10_000), st.sampled_from([2, 3]))
def test_desugaring_preserves_traces(seed, width):
    text = random_program(seed, width=width)
    L = load(text, width)
    steps = 6
    assert Interpreter(parse(text), width).traces(steps) == loop_traces(L, steps)
