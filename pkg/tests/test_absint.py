from __future__ import annotations

import json

import numpy as np
from hypothesis import given, strategies as st

from dangerinv import corpus, load
from dangerinv import semantics as sem
from dangerinv.absint import LOCATIONS, Alarm, Safe, analyze, classify_alarm
from dangerinv.generate import random_program
from dangerinv.oracle import build_graph, table_search
from dangerinv.result import SafetyProved

FIG7 = {"entry": (100, 200), "loop-head": (-1, 200), "body-entry": (1, 200),
        "body-exit": (-1, 198), "loop-exit": (-1, 0)}


def test_fig7_intervals():
    L = corpus.program("fig7", 16)
    ann = analyze(L)
    assert {loc: ann[loc]["y"] for loc in LOCATIONS} == FIG7
    assert not ann.widened
    assert isinstance(classify_alarm(ann, L), Alarm)


def test_reports():
    L = corpus.program("fig7", 16)
    ann = analyze(L)
    assert "loop-head: y=[-1,200]" in ann.to_text()
    data = json.loads(ann.to_json())
    assert data["locations"]["body-exit"] == {"y": [-1, 198]}


def test_assume_false_is_bottom():
    ann = analyze(load("int x = 0; assume(false); while (x < 3) { x++; } assert(x == 3);", 8))
    assert all(ann[loc].is_bottom for loc in LOCATIONS)


def test_guard_initially_false():
    L = load("int x = 5; while (x < 3) { x++; } assert(x == 5);", 8)
    ann = analyze(L)
    assert ann["loop-exit"] == ann["entry"]
    assert ann["body-entry"].is_bottom


def test_fig3c_safe(fig3c):
    assert isinstance(classify_alarm(analyze(fig3c), fig3c), Safe)


def test_trivial_assertion_safe(fig3a):
    L = load("int x = *; while (x < 10) { x++; } assert(true);", 8)
    assert isinstance(classify_alarm(analyze(L), L), Safe)


def test_widening_terminates_with_flag():
    L = load("int x = 0; while (x < 100) { x++; } assert(x == 100);", 8)
    exact = analyze(L)
    assert exact["loop-head"]["x"] == (0, 100)
    capped = analyze(L, max_iterations=5)
    assert capped.widened
    lo, hi = capped["loop-head"]["x"]
    assert lo <= 0 and hi >= 100
    w = analyze(L, widen_after=2)
    assert w.widened and w.iterations < exact.iterations


def _concrete_locations(L):
    g = build_graph(L, budget=1 << 16)
    reach = g.forward(g.init)
    idx = np.flatnonzero(reach)
    guard = sem.compiled(L).v_guard
    out = {loc: [] for loc in LOCATIONS}
    out["entry"] = [sem.state_at(L, int(i)) for i in np.flatnonzero(g.init)]
    for i in idx:
        s = sem.state_at(L, int(i))
        out["loop-head"].append(s)
        if sem.holds_guard(L, s):
            out["body-entry"].append(s)
            out["body-exit"].extend(t for _, t in sem.successors(L, s))
        else:
            out["loop-exit"].append(s)
    return out


@given(st.integers(0, 20_000), st.sampled_from([3, 4]))
def test_soundness(seed, width):
    L = load(random_program(seed, width=width), width)
    ann = analyze(L)
    for loc, states in _concrete_locations(L).items():
        for s in states:
            assert ann[loc].contains(dict(zip(L.vars, s))), (loc, s)


@given(st.integers(0, 20_000))
def test_safe_agrees_with_oracle(seed):
    L = load(random_program(seed, width=3), 3)
    if isinstance(classify_alarm(analyze(L), L), Safe):
        assert isinstance(table_search(L), SafetyProved)
