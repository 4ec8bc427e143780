from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dangerinv import corpus, load
from dangerinv import expr as E
from dangerinv import semantics as sem
from dangerinv.certificate import DangerCertificate, SafetyCertificate, check_danger, check_safety
from dangerinv.generate import random_program
from dangerinv.oracle import table_search
from dangerinv.result import DangerProved, SafetyProved, Unknown
from dangerinv.synth import (Budget, CegisState, CounterexampleInput, Grammar, GrammarExhausted,
                             Ok, cegis, for_loop, synth_step, verif_step)
from dangerinv.synth.bank import ExprBank
from dangerinv.syntax import parse_expr as P


def test_first_candidate_is_minimal(fig4a16):
    c = synth_step(fig4a16, CegisState("danger"))
    assert c.D == E.TRUE and c.size() == 3
    assert c.x0 == sem.initial_states(fig4a16)[0]
    assert synth_step(fig4a16, CegisState("safety")).S == E.TRUE


def test_contradictory_inputs(fig4a16):
    cs = CegisState("danger", negative=[(3, 4)], positive=[(3, 4)])
    with pytest.raises(GrammarExhausted):
        synth_step(fig4a16, cs)


def test_verif_step_examples(fig4a16, fig3a):
    good = corpus.fig4_golden("fig4a", 16, wrap_safe=True)
    assert verif_step(fig4a16, good) == Ok()
    loose = DangerCertificate(E.TRUE, P("16 - x"), {"y": P("y + 1")}, (0, 1))
    ce = verif_step(fig4a16, loose)
    assert isinstance(ce, CounterexampleInput)
    assert ce.criterion == "exit" and ce.state == (16, 16)
    ce = verif_step(fig3a, SafetyCertificate(E.TRUE))
    assert ce.state == (11,) and ce.criterion == "exit"


def test_empty_grammar_is_unknown(fig4a16):
    r = cegis(fig4a16, Grammar(max_size=0))
    assert isinstance(r, Unknown) and r.reason == "grammar-exhausted"


def test_fig3c_safe(fig3c):
    r = cegis(fig3c, mode="gs", budget=Budget(timeout=60))
    assert isinstance(r, SafetyProved)
    assert check_safety(fig3c, r.cert).ok


@pytest.mark.parametrize("name,width,subst", [
    ("fig4a", 8, {corpus.BIG: 16}), ("fig4b", 8, {corpus.BIG: 16}), ("fig3a", 8, {}),
    ("fig3b", 8, {}),
])
def test_danger_results_revalidate(name, width, subst):
    L = corpus.program(name, width, subst)
    r = cegis(L, budget=Budget(timeout=60))
    assert isinstance(r, DangerProved)
    assert check_danger(L, r.cert).ok
    assert not sem.holds_assert(L, r.trace.last)


def test_fig4a_result_is_not_the_wrapping_predicate(fig4a16):
    # x < y is not inductive at 8 bits, so no correct search can return it.
    r = cegis(fig4a16, budget=Budget(timeout=60))
    cols = sem.columns(fig4a16, 0, fig4a16.state_count)
    d = E.eval_columns(E.compile_vec(r.cert.D, 8), cols, fig4a16.state_count).astype(bool)
    assert not np.array_equal(d, cols["x"] < cols["y"])


def test_determinism_across_jobs():
    L = corpus.program("fig3b")
    a = cegis(L, budget=Budget(timeout=60, jobs=1))
    b = cegis(L, budget=Budget(timeout=60, jobs=3))
    assert a.cert == b.cert and a.iterations == b.iterations


def test_iteration_budget(fig4a16):
    r = cegis(fig4a16, budget=Budget(max_iterations=2))
    assert isinstance(r, Unknown) and r.reason == "budget"


def test_timeout_reported():
    L = corpus.program("fig4d", 8, {corpus.BIG: 100})
    r = cegis(L, budget=Budget(timeout=0.05))
    assert isinstance(r, Unknown) and r.reason == "timeout"


def test_stochastic_strategy_still_validated():
    L = corpus.program("fig3a")
    r = cegis(L, budget=Budget(timeout=30, strategy="stochastic", seed=3))
    if not isinstance(r, Unknown):
        assert check_danger(L, r.cert).ok


def test_inputs_are_distinct(fig4a16):
    from dangerinv.synth.cegis import DangerSearch, Workspace, _Clock
    g = for_loop(fig4a16)
    cs = CegisState("danger")
    search = DangerSearch(fig4a16, g, Workspace(fig4a16, g), cs, _Clock(Budget(), [cs]))
    for cand in search.levels():
        if cand is not None:
            break
    assert len(cs.inputs) == len(set(cs.inputs)) > 0
    with pytest.raises(AssertionError):
        cs.record(*cs.inputs[0])


def test_table_search_examples():
    L = corpus.program("fig3a", 4, {10: 5})
    r = table_search(L)
    assert isinstance(r, DangerProved) and r.cert.x0[0] in (6, 7)
    L = corpus.program("fig3c", 4, {10: 5})
    r = table_search(L)
    assert isinstance(r, SafetyProved)
    reach = {s for s in sem.enumerate_states(L)
             if E.evaluate(r.cert.S, sem.env_of(L, s), 4)}
    assert reach == {(0, y) for y in range(-8, 8)}
    L = load("int x = 0; assume(false); while (x < 3) { x++; } assert(x == 1);", 4)
    r = table_search(L)
    assert isinstance(r, SafetyProved)
    assert not any(E.evaluate(r.cert.S, sem.env_of(L, s), 4) for s in sem.enumerate_states(L))


@settings(max_examples=25)
@given(st.integers(0, 10_000))
def test_cegis_never_contradicts_oracle(seed):
    L = load(random_program(seed, width=3), 3)
    exact = table_search(L)
    r = cegis(L, budget=Budget(timeout=2))
    if not isinstance(r, Unknown):
        assert r.kind == exact.kind


def test_bank_levels_are_sort_correct():
    L = corpus.program("fig4a", 8, {corpus.BIG: 16})
    sample = sem.decode(L, np.arange(0, L.state_count, 97, dtype=np.int64))
    bank = ExprBank(L.vars, 8, True, (0, 1, -1, 16), ("neg", "add", "sub", "mul", "ite"),
                    ("not", "eq", "ne", "lt", "le", "and", "or"), sample, 2000)
    for size in range(1, 6):
        for sort in (E.BOOL, E.INT):
            for i in bank.ids(sort, size):
                e = bank.exprs[i]
                assert e.sort == sort and e.size() == size
