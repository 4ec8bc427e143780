from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from dangerinv import corpus, load
from dangerinv import semantics as sem
from dangerinv.bmc import Counterexample, NoneWithinBound, cex_to_danger, erase_loops, unwind
from dangerinv.certificate import check_danger
from dangerinv.errors import BudgetExceeded, NotSimple
from dangerinv.generate import random_program
from dangerinv.semantics import Trace, TraceStatus
from dangerinv.syntax import parse_expr as P


@pytest.fixture(scope="module")
def fig7():
    return corpus.program("fig7", 16)


def test_fig7_counterexample(fig7):
    r = unwind(fig7, 60)
    assert isinstance(r, Counterexample)
    ys = [s[0] for s in r.trace.states]
    assert ys == list(range(101, -2, -2))
    assert r.depth == 51


def test_fig7_too_shallow(fig7):
    assert unwind(fig7, 10) == NoneWithinBound(10)


@pytest.mark.parametrize("k", [0, 5, 40])
def test_safe_program_has_no_counterexample(fig3c, k):
    assert unwind(fig3c, k) == NoneWithinBound(k)


def test_fig7_dual_certificate(fig7):
    cert = cex_to_danger(fig7, unwind(fig7, 60))
    assert cert.D == P(" || ".join(f"y == {y}" for y in range(101, -2, -2)))
    assert cert.x0 == (101,)
    assert check_danger(fig7, cert).ok


def test_single_state_counterexample(fig3a):
    r = unwind(fig3a, 5)
    assert r.trace.states == ((11,),)
    cert = cex_to_danger(fig3a, r)
    assert cert.D == P("x == 11") and cert.R == P("1")
    assert check_danger(fig3a, cert).ok


def test_replay_matches_trace(fig4a16):
    r = unwind(fig4a16, 20)
    assert r.depth == 16
    assert sem.replay(fig4a16, r.trace.first, r.choices).states == r.trace.states


def test_frontier_cap(fig7):
    with pytest.raises(BudgetExceeded):
        unwind(fig7, 60, cap=50)


def test_loop_erasure():
    states = [(0,), (1,), (2,), (1,), (3,)]
    choices = [{"n": 0}, {"n": 1}, {"n": 2}, {"n": 3}]
    s, c = erase_loops(states, choices)
    assert s == [(0,), (1,), (3,)]
    assert c == [{"n": 0}, {"n": 3}]


def test_repeated_states_need_erasure():
    L = load("int x = 0; while (x < 3) { if (*) x++; } assert(x == 0);", 4)
    trace = Trace(((0,), (0,), (1,), (2,), (3,)), TraceStatus.COMPLETED)
    cex = Counterexample(trace, ({"n1": 0}, {"n1": 1}, {"n1": 1}, {"n1": 1}))
    with pytest.raises(NotSimple):
        cex_to_danger(L, cex, erase=False)
    cert = cex_to_danger(L, cex)
    assert check_danger(L, cert).ok


@settings(max_examples=50)
@given(st.integers(0, 20_000))
def test_random_unsafe_programs(seed):
    L = load(random_program(seed, width=3), 3)
    r = unwind(L, L.state_count)
    if not isinstance(r, Counterexample):
        return
    t = r.trace
    assert sem.holds_init(L, t.first) and sem.is_error_exit(L, t.last)
    assert sem.replay(L, t.first, r.choices).states == t.states
    assert check_danger(L, cex_to_danger(L, r)).ok
    for k in (r.depth, r.depth + 1, r.depth + 7):
        assert isinstance(unwind(L, k), Counterexample)
    if r.depth:
        assert isinstance(unwind(L, r.depth - 1), NoneWithinBound)
