"""Acceptance criteria, one test each, at their stated tolerances.

Each test records a PASS/FAIL line that is printed in the terminal summary
under "acceptance criteria".
"""

from __future__ import annotations

import statistics
import time

from dangerinv import corpus, load, parse
from dangerinv import semantics as sem
from dangerinv.absint import LOCATIONS, analyze
from dangerinv.bmc import Counterexample, cex_to_danger, unwind
from dangerinv.certificate import check_danger, extract_trace
from dangerinv.cli import main
from dangerinv.generate import ProgramGenerator
from dangerinv.interp import Interpreter
from dangerinv.mutate import mutants
from dangerinv.oracle import TABLE_BUDGET, doom_analysis, table_search
from dangerinv.report import measure
from dangerinv.result import DangerProved, SafetyProved, Unknown
from dangerinv.synth import Budget, cegis

BIG = corpus.BIG


def test_criterion_1_interval_reproduction(criterion):
    L = corpus.program("fig7", 16)
    t = time.perf_counter()
    ann = analyze(L)
    dt = time.perf_counter() - t
    got = [ann[loc]["y"] for loc in LOCATIONS]
    want = [(100, 200), (-1, 200), (1, 200), (-1, 198), (-1, 0)]
    ok = got == want and dt < 1.0
    criterion(1, ok, f"intervals {got}, {dt:.3f}s")
    assert ok


def test_criterion_2_golden_certificates(criterion):
    t = time.perf_counter()
    notes, ok = [], True
    for name in ("fig4a", "fig4b", "fig4c"):
        L, cf = corpus.for_certificate(name)
        assert cf.width == 8 and cf.subst_map == {BIG: 16}
        v = check_danger(L, cf.cert)
        killed = sum(not check_danger(L, m).ok for m in mutants(L, cf.cert, 20, seed=0))
        ok &= v.ok and killed == 20
        notes.append(f"{name}: {'Ok' if v.ok else v.describe(L)}, {killed}/20 mutants rejected")
    dt = time.perf_counter() - t
    ok &= dt < 10
    criterion(2, ok, "; ".join(notes) + f"; {dt:.2f}s")
    assert ok, notes


def _programs(count: int, seed: int, widths):
    for i in range(count):
        w = widths[i % len(widths)]
        yield w, ProgramGenerator(seed + i, max_vars=2, width=w).program()


def _replays(L, cert, trace) -> bool:
    again = sem.run(L, cert.x0, cert.skolem, max_steps=len(trace))
    return (again.states == trace.states and sem.holds_init(L, trace.first)
            and not sem.holds_guard(L, trace.last) and not sem.holds_assert(L, trace.last))


def test_criterion_3_trace_soundness(criterion):
    checked = failures = 0
    for w, text in _programs(200, 30_000, (3, 4)):
        L = load(text, w)
        results = [cegis(L, budget=Budget(timeout=1.0))]
        if L.state_count <= TABLE_BUDGET:
            results.append(table_search(L))
        for r in results:
            if isinstance(r, DangerProved):
                checked += 1
                trace = extract_trace(L, r.cert)
                failures += not (_replays(L, r.cert, trace) and trace == r.trace)
    ok = failures == 0 and checked > 0
    criterion(3, ok, f"{checked} danger proofs replayed, {failures} failures")
    assert ok


def test_criterion_4_oracle_equivalence(criterion):
    t = time.perf_counter()
    disagree = opposite = proved = 0
    for _, text in _programs(100, 50_000, (3,)):
        L = load(text, 3)
        exact = table_search(L)
        depth = 1 << (L.nvars * 3)
        unsafe = Interpreter(parse(text), 3).find_failure(depth) is not None
        disagree += unsafe != isinstance(exact, DangerProved)
        r = cegis(L, budget=Budget(timeout=2.0))
        if not isinstance(r, Unknown):
            proved += 1
            opposite += r.kind != exact.kind
    dt = time.perf_counter() - t
    ok = disagree == 0 and opposite == 0 and dt < 300
    criterion(4, ok, f"{disagree} oracle disagreements, {opposite} opposite cegis proofs "
                     f"({proved}/100 proved), {dt:.1f}s")
    assert ok


def test_criterion_5_bmc_duality(criterion):
    L = corpus.program("fig7", 16)
    r = unwind(L, 60)
    ok = isinstance(r, Counterexample)
    detail = "no counterexample"
    if ok:
        y0, yn = r.trace.first[0], r.trace.last[0]
        v = check_danger(L, cex_to_danger(L, r))
        ok = y0 % 2 == 1 and yn == -1 and v.ok
        detail = f"y0={y0}, final y={yn}, depth {r.depth}, dual certificate {'Ok' if v.ok else v.criterion}"
    criterion(5, ok, detail)
    assert ok


def test_criterion_6_deep_vs_shallow(criterion):
    t = time.perf_counter()
    rows = measure((16, 64, 120), "fig4a", 8, repeats=7)
    dt = time.perf_counter() - t
    bmc = [r.bmc_seconds for r in rows]
    chk = [r.check_seconds for r in rows]
    increasing = all(a < b for a, b in zip(bmc, bmc[1:]))
    spread = max(chk) / min(chk)
    ok = increasing and spread < 2 and all(r.check_ok for r in rows) and dt < 60
    criterion(6, ok, "unwind " + ", ".join(f"{x * 1e3:.2f}ms" for x in bmc)
              + "; check " + ", ".join(f"{x * 1e3:.2f}ms" for x in chk) + f" (spread {spread:.2f}x)")
    assert ok


def test_criterion_7_end_to_end(criterion, capsys):
    runs = [("fig4a", ["--subst", f"{BIG}=16"], 10), ("fig4d", ["--subst", f"{BIG}=100"], 10),
            ("fig3a", [], 10), ("fig3b", [], 10), ("fig3c", [], 20)]
    notes, ok = [], True
    for name, extra, want in runs:
        t = time.perf_counter()
        code = main(["solve", corpus.path_of(name), "--bits", "8", "--timeout", "120", *extra])
        dt = time.perf_counter() - t
        capsys.readouterr()
        good = code == want and dt < 120
        ok &= good
        notes.append(f"{name} exit {code} in {dt:.1f}s")
    criterion(7, ok, "; ".join(notes))
    assert ok


def test_criterion_8_doom_hierarchy(criterion):
    a = doom_analysis(corpus.program("fig3a", 4, {10: 5}))
    b = doom_analysis(corpus.program("fig3b", 4, {10: 5}))
    facts = {
        "3a doomed-head": a.exists("doomed-head"), "3a doomed-state": a.exists("doomed-state"),
        "3b doomed-state": b.exists("doomed-state"), "3b danger": b.exists("danger"),
    }
    ok = facts == {"3a doomed-head": False, "3a doomed-state": True,
                   "3b doomed-state": False, "3b danger": True}
    criterion(8, ok, ", ".join(f"{k}: {'yes' if v else 'no'}" for k, v in facts.items()))
    assert ok
