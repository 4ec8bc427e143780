from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dangerinv import corpus, load
from dangerinv import expr as E
from dangerinv import semantics as sem
from dangerinv.errors import BudgetExceeded, GuardFalse, UnboundSymbol
from dangerinv.generate import random_program
from dangerinv.syntax import parse_expr
from dangerinv.semantics import TraceStatus


def test_eval_examples():
    assert E.evaluate(parse_expr("x < y"), {"x": 0, "y": 1}, 8) is True
    assert E.evaluate(E.const(5), {}, 8) == 5
    assert E.evaluate(E.add(E.const(255), E.const(1)), {}, 8) == 0
    assert E.evaluate(parse_expr("x + 1"), {"x": 127}, 8) == -128


def test_eval_unbound():
    with pytest.raises(UnboundSymbol):
        E.evaluate(parse_expr("x + 1"), {}, 8)


def test_signed_comparison():
    assert E.evaluate(parse_expr("x + 100 < 0"), {"x": 100}, 8) is True


def test_step_examples(fig4a16, fig3c):
    assert sem.step(fig4a16, (0, 1), {"n1": 1}) == (1, 2)
    assert sem.step(fig4a16, (0, 1), {"n1": 0}) == (1, 1)
    assert sem.step(fig3c, (0, 0)) == (0, 1)


def test_step_outside_guard(fig3a):
    with pytest.raises(GuardFalse):
        sem.step(fig3a, (11,))


def test_run_examples(fig3a, fig3c):
    t = sem.run(fig3a, (11,), {})
    assert t.states == ((11,),) and t.status is TraceStatus.COMPLETED
    assert not sem.holds_assert(fig3a, t.last)
    assert sem.run(fig3c, (0, 0), {}, max_steps=100).status is TraceStatus.TRUNCATED


def test_run_fig4a_bound4():
    L = corpus.program("fig4a", 8, {corpus.BIG: 4})
    t = sem.run(L, (0, 1), {"y": parse_expr("y + 1")})
    assert t.states == ((0, 1), (1, 2), (2, 3), (3, 4), (4, 5))
    assert t.status is TraceStatus.COMPLETED


def test_skolem_site_key(fig4a16):
    t = sem.run(fig4a16, (0, 1), {"n1": E.FALSE})
    assert t.last == (16, 1)


@pytest.mark.parametrize("text,width,count", [
    ("int x = 0; while (x < 1) { x++; }", 2, 4),
    ("int x = 0; int y = 0; while (x < 1) { x++; }", 3, 64),
])
def test_enumeration_counts(text, width, count):
    states = list(sem.enumerate_states(load(text, width)))
    assert len(states) == count == len(set(states))


def test_enumeration_order():
    L = load("int x = 0; int y = 0; while (x < 1) { x++; }", 2)
    vals = [0, 1, -2, -1]
    assert list(sem.enumerate_states(L)) == [(a, b) for a in vals for b in vals]


def test_enumeration_budget():
    L = load("int a = 0; int b = 0; int c = 0; while (a < 1) { a++; }", 9)
    with pytest.raises(BudgetExceeded):
        next(iter(sem.enumerate_states(L)))


def test_encode_decode_round_trip(fig4a16):
    idx = np.arange(fig4a16.state_count, dtype=np.int64)
    assert np.array_equal(sem.encode(fig4a16, sem.decode(fig4a16, idx)), idx)
    for i in (0, 1, 255, 256, 40000):
        assert sem.state_index(fig4a16, sem.state_at(fig4a16, i)) == i


@given(st.integers(0, 5000), st.data())
def test_run_respects_adjacency(seed, data):
    L = load(random_program(seed, width=3), 3)
    starts = sem.initial_states(L)
    if not starts:
        return
    x0 = data.draw(st.sampled_from(starts))
    skolem = {s.name: E.const(data.draw(st.sampled_from(s.domain(3)))) for s in L.sites}
    a = sem.run(L, x0, skolem, max_steps=20)
    assert a == sem.run(L, x0, skolem, max_steps=20)
    for s, t in zip(a.states, a.states[1:]):
        assert t in {nxt for _, nxt in sem.successors(L, s)}
    if a.status is TraceStatus.COMPLETED:
        assert not sem.holds_guard(L, a.last)


@given(st.integers(0, 5000))
def test_vector_and_scalar_evaluation_agree(seed):
    L = load(random_program(seed, width=3), 3)
    comp = sem.compiled(L)
    cols = sem.columns(L, 0, L.state_count)
    g = E.eval_columns(comp.v_guard, cols, L.state_count).astype(bool)
    for i, s in enumerate(sem.enumerate_states(L)):
        assert bool(g[i]) == sem.holds_guard(L, s)
