from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from dangerinv import corpus, load
from dangerinv import expr as E
from dangerinv import semantics as sem
from dangerinv.certificate import (CertificateFile, DangerCertificate, SafetyCertificate, bind,
                                   check_danger, check_safety, dumps, extract_trace, loads)
from dangerinv.errors import CertificateFormatError, CertificateInvalid, SortError
from dangerinv.generate import random_program
from dangerinv.mutate import mutants
from dangerinv.oracle import doom_analysis, table_search
from dangerinv.result import DangerProved
from dangerinv.syntax import parse_expr as P


def danger(D, R, N, x0):
    return DangerCertificate(P(D), P(R), {k: P(v) for k, v in N.items()}, x0)


def test_wrap_safe_fig4a_certificate_ok(fig4a16):
    assert check_danger(fig4a16, danger("y == x + 1", "16 - x", {"y": "y + 1"}, (0, 1))).ok


def test_literal_fig4a_predicate_breaks_at_wrap(fig4a16):
    v = check_danger(fig4a16, danger("x < y", "16 - x", {"y": "y + 1"}, (0, 1)))
    assert v.criterion == "inductive"
    assert v.witness == ((0, 127), (1, -128))


def test_constant_ranking_fails_decrease(fig4a16):
    v = check_danger(fig4a16, danger("y == x + 1", "1", {"y": "y + 1"}, (0, 1)))
    assert v.criterion == "rank-decrease" and v.witness_states()[0] == (0, 1)


def test_weak_predicate_first_witness(fig4a16):
    v = check_danger(fig4a16, danger("x <= y", "16 - x", {"y": "y + 1"}, (0, 1)))
    assert not v.ok
    assert v.criterion == "inductive" and v.witness_states()[0] == (0, 127)


def test_exit_criterion(fig4a16):
    v = check_danger(fig4a16, danger("y == x + 1 || x == y", "16 - x", {"y": "y + 1"}, (0, 1)))
    assert v.criterion == "exit" and v.witness == (16, 16)


def test_base_and_rank_positive(fig4a16):
    assert check_danger(fig4a16, danger("y == x + 1", "16 - x", {"y": "y + 1"}, (1, 2))).criterion == "base"
    v = check_danger(fig4a16, danger("y == x + 1", "0 - x", {"y": "y + 1"}, (0, 1)))
    assert v.criterion == "rank-positive"


def test_unmatched_skolem_target_is_inductive_violation(fig4a16):
    v = check_danger(fig4a16, danger("y == x + 1", "16 - x", {"y": "y + 2"}, (0, 1)))
    assert v.criterion == "inductive"


def test_safety_examples(fig3a, fig3c):
    assert check_safety(fig3c, SafetyCertificate(P("x == 0"))).ok
    v = check_safety(fig3a, SafetyCertificate(E.TRUE))
    assert v.criterion == "exit" and v.witness_states() == ((11,),)
    empty = load("int x = 0; assume(false); while (x < 3) { x++; } assert(x == 0);", 4)
    assert check_safety(empty, SafetyCertificate(E.FALSE)).ok


def test_safety_inductive_witness_pairs(fig3c):
    v = check_safety(fig3c, SafetyCertificate(P("x == 0 && y < 5")))
    assert v.criterion == "inductive" and v.witness == ((0, 4), (0, 5))


def test_sort_checked():
    with pytest.raises(SortError):
        DangerCertificate(P("x + 1"), P("1"), {}, (0,))
    with pytest.raises(SortError):
        SafetyCertificate(P("x"))


def test_extract_trace_examples(fig3a, fig4a16):
    L4 = corpus.program("fig4a", 8, {corpus.BIG: 4})
    t = extract_trace(L4, corpus.fig4_golden("fig4a", 4, wrap_safe=True))
    assert t.states == ((0, 1), (1, 2), (2, 3), (3, 4), (4, 5))
    assert extract_trace(fig3a, danger("x > 10", "1", {}, (11,))).states == ((11,),)
    t16 = extract_trace(fig4a16, corpus.fig4_golden("fig4a", 16, wrap_safe=True))
    assert len(t16) == 17


def test_extract_trace_rejects_unchecked(fig3c):
    with pytest.raises(CertificateInvalid):
        extract_trace(fig3c, danger("x == 0", "100", {}, (0, 0)))


@pytest.mark.parametrize("name", ["fig4a-wrap", "fig4c", "fig4d", "fig3b", "fig3a"])
def test_jobs_do_not_change_verdict(name):
    L, cf = corpus.for_certificate(name)
    for c in [cf.cert, *mutants(L, cf.cert, 6)]:
        a = check_danger(L, c)
        assert a == check_danger(L, c, jobs=3, chunk=512)


def test_safety_verdict_independent_of_jobs(fig3c):
    for S in ("x == 0", "x == 0 && y < 5", "true", "y >= 0"):
        c = SafetyCertificate(P(S))
        assert check_safety(fig3c, c) == check_safety(fig3c, c, jobs=3, chunk=1000)


# ------------------------------------------------------------ file format

@pytest.mark.parametrize("name", corpus.certificate_names())
def test_shipped_certificates_round_trip(name):
    text = corpus.certificate_text(name)
    assert dumps(loads(text)) == text


@given(st.integers(0, 3000))
def test_table_certificates_round_trip(seed):
    text = random_program(seed, width=3)
    L = load(text, 3)
    r = table_search(L)
    cf = CertificateFile(r.cert, "0" * 64, 3, (), L.vars)
    out = dumps(cf)
    back = loads(out)
    assert dumps(back) == out
    assert back.cert == r.cert


def test_format_errors():
    good = corpus.certificate_text("fig3b")
    with pytest.raises(CertificateFormatError):
        loads(good.replace("kind danger", "kind maybe"))
    with pytest.raises(CertificateFormatError):
        loads(good.replace("D x == 0", "D x +"))
    with pytest.raises(CertificateFormatError):
        loads("kind danger\nprogram x\nwidth 8\n")
    with pytest.raises(CertificateFormatError):
        loads(good + "colour blue\n")


def test_bind_checks_names():
    L, cf = corpus.for_certificate("fig4a-wrap")
    bind(cf, L)
    other = corpus.program("fig3a")
    with pytest.raises(CertificateFormatError):
        bind(cf, other)


# ------------------------------------------------------------- properties

def _unsafe_random(seed, width=3):
    L = load(random_program(seed, width=width), width)
    r = table_search(L)
    return L, r


@given(st.integers(0, 5000))
def test_soundness_on_mutated_certificates(seed):
    L, r = _unsafe_random(seed)
    if not isinstance(r, DangerProved):
        return
    for c in [r.cert, *mutants(L, r.cert, 4, seed)]:
        if not check_danger(L, c).ok:
            continue
        t = extract_trace(L, c)
        assert sem.holds_init(L, t.first)
        assert not sem.holds_guard(L, t.last) and not sem.holds_assert(L, t.last)
        assert len(t) <= max(0, int(E.evaluate(c.R, sem.env_of(L, c.x0), L.width, wrap=False))) + 1


@given(st.integers(0, 5000))
def test_hierarchy(seed):
    L = load(random_program(seed, width=3), 3)
    rep = doom_analysis(L)
    if rep.doomed_head is not None:
        S = rep.doomed_head.S
        assert check_safety(L, S, "doomed-head").ok
        for x0 in sem.initial_states(L):
            assert check_safety(L, S, "doomed-state", x0=x0).ok
    if rep.doomed_state is not None:
        c = rep.doomed_state
        assert check_safety(L, c).ok
        assert check_safety(L, c.S, "partial-danger", x0=c.x0).ok
    if rep.danger is not None:
        d = rep.danger
        assert check_danger(L, d).ok
        assert check_safety(L, d.D, "partial-danger", x0=d.x0).ok


@given(st.integers(0, 5000))
def test_mode_checks_agree_with_oracle(seed):
    L = load(random_program(seed, width=3), 3)
    rep = doom_analysis(L)
    for c in (rep.doomed_head, rep.doomed_state, rep.partial_danger):
        if c is not None:
            assert check_safety(L, c).ok


DUAL_CANDIDATES = ("true", "false", "x == 0", "x < 10", "x > 10", "x >= 0")


@pytest.mark.parametrize("name", ["fig3a", "fig3b", "fig4c", "fig4d", "fig4a-wrap", "fig7"])
def test_exclusivity_danger_side(name):
    L, cf = corpus.for_certificate(name)
    assert check_danger(L, cf.cert).ok
    cands = [cf.cert.D, *(P(s.replace("x", L.vars[0])) for s in DUAL_CANDIDATES)]
    for S in cands:
        assert not check_safety(L, SafetyCertificate(S)).ok


def test_exclusivity_safe_side():
    L, cf = corpus.for_certificate("fig3c")
    assert check_safety(L, cf.cert).ok
    for D in ("x == 0", "x == 0 && y == 0", "true", "y >= 0"):
        for R in ("1", "10 - x", "0 - y"):
            assert not check_danger(L, DangerCertificate(P(D), P(R), {}, (0, 0))).ok
