"""Exact decision procedure over explicit state tables.

For state spaces up to a few thousand states the transition relation is
materialised as a successor array (one row per nondet combination).  Fixed
points over it decide safety exactly and yield certificates whose
components are lookup tables, so they can be validated by the ordinary
certificate checker.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr as E
from . import semantics as sem
from .certificate import (DangerCertificate, SafetyCertificate, check_danger, check_safety,
                          extract_trace)
from .errors import BudgetExceeded, CertificateInvalid
from .loop import LoopSystem
from .result import DangerProved, SafetyProved

TABLE_BUDGET = 1 << 12


@dataclass
class StateGraph:
    L: LoopSystem
    init: np.ndarray       # bool per state
    guard: np.ndarray      # bool per state
    ok_exit: np.ndarray    # outside the loop and the assertion holds
    bad_exit: np.ndarray   # outside the loop and the assertion fails
    succ: np.ndarray       # (combos, states) successor index, -1 for non-guard states
    combos: list[dict]

    @property
    def n(self) -> int:
        return len(self.init)

    def forward(self, start: np.ndarray) -> np.ndarray:
        seen = start.copy()
        frontier = np.flatnonzero(start)
        while len(frontier):
            nxt = self.succ[:, frontier].ravel()
            nxt = np.unique(nxt[nxt >= 0])
            nxt = nxt[~seen[nxt]]
            seen[nxt] = True
            frontier = nxt
        return seen

    def backward_some(self, target: np.ndarray) -> np.ndarray:
        """Distance (in steps) to ``target`` along some path; -1 if unreachable."""
        dist = np.where(target, 0, -1)
        reached = target.copy()
        k = 0
        g = np.flatnonzero(self.guard)
        while True:
            k += 1
            cand = g[~reached[g]]
            if not len(cand):
                break
            s = self.succ[:, cand]
            hit = (reached[np.maximum(s, 0)] & (s >= 0)).any(axis=0)
            if not hit.any():
                break
            new = cand[hit]
            reached[new] = True
            dist[new] = k
        return dist

    def partial_danger(self) -> np.ndarray:
        """Greatest set avoiding good exits in which every guard state keeps a successor."""
        keep = ~self.ok_exit
        while True:
            s = self.succ
            stay = (keep[np.maximum(s, 0)] & (s >= 0)).any(axis=0)
            new = keep & (~self.guard | stay)
            if (new == keep).all():
                return keep
            keep = new


def build_graph(L: LoopSystem, budget: int = TABLE_BUDGET) -> StateGraph:
    if L.state_count > budget:
        raise BudgetExceeded(f"table search handles at most {budget} states, "
                             f"this loop has {L.state_count}")
    comp = sem.compiled(L)
    n = L.state_count
    cols = sem.columns(L, 0, n)
    init = E.eval_columns(comp.v_init, cols, n).astype(bool)
    guard = E.eval_columns(comp.v_guard, cols, n).astype(bool)
    a = E.eval_columns(comp.v_assert, cols, n).astype(bool)
    combos = sem.nondet_combos(L)
    succ = np.full((len(combos), n), -1, dtype=np.int64)
    gidx = np.flatnonzero(guard)
    sub = {v: cols[v][gidx] for v in L.vars}
    for j, nd in enumerate(combos):
        ndc = {k: np.int64(v) for k, v in nd.items()}
        nxt = sem.step_columns(L, sub, ndc, len(gidx))
        succ[j, gidx] = sem.encode(L, nxt)
    return StateGraph(L, init, guard, ~guard & a, ~guard & ~a, succ, combos)


def _set_table(L: LoopSystem, states, sort=E.BOOL) -> E.Expr:
    return E.table(L.vars, [(s, 1) for s in states], 0, sort)


def _error_run(g: StateGraph):
    dist = g.backward_some(g.bad_exit)
    starts = np.flatnonzero(g.init & (dist >= 0))
    if not len(starts):
        return None
    cur = int(starts[0])
    path, choices = [cur], []
    while dist[cur] > 0:
        for j in range(len(g.combos)):
            nxt = int(g.succ[j, cur])
            if nxt >= 0 and dist[nxt] == dist[cur] - 1:
                path.append(nxt)
                choices.append(g.combos[j])
                cur = nxt
                break
    return path, choices


def danger_tables(L: LoopSystem, path, choices) -> DangerCertificate:
    states = [sem.state_at(L, i) for i in path]
    n = len(states)
    D = _set_table(L, states)
    R = E.table(L.vars, [(s, n - i) for i, s in enumerate(states)], 0, E.INT)
    skolem = {}
    for site in L.sites:
        rows = [(states[i], int(nd[site.name])) for i, nd in enumerate(choices)]
        skolem[site.name] = E.table(L.vars, rows, 0, E.INT)
    return DangerCertificate(D, R, skolem, states[0])


def table_search(L: LoopSystem, budget: int = TABLE_BUDGET):
    """Decide the loop exactly; return a validated proof of the right kind."""
    g = build_graph(L, budget)
    run = _error_run(g)
    if run is not None:
        cert = danger_tables(L, *run)
        v = check_danger(L, cert)
        if not v.ok:
            raise CertificateInvalid(f"internal error: table certificate rejected ({v.describe(L)})")
        return DangerProved(cert, extract_trace(L, cert), stats={"states": g.n})
    reach = g.forward(g.init)
    cert = SafetyCertificate(_set_table(L, [sem.state_at(L, int(i)) for i in np.flatnonzero(reach)]))
    v = check_safety(L, cert)
    if not v.ok:
        raise CertificateInvalid(f"internal error: reachable set rejected ({v.describe(L)})")
    return SafetyProved(cert, stats={"states": g.n, "reachable": int(reach.sum())})


@dataclass(frozen=True)
class DoomReport:
    """Which of the danger-flavoured proofs exist, with a witness when one does."""
    doomed_head: SafetyCertificate | None
    doomed_state: SafetyCertificate | None
    partial_danger: SafetyCertificate | None
    danger: DangerCertificate | None

    def exists(self, mode: str) -> bool:
        return getattr(self, mode.replace("-", "_")) is not None


def doom_analysis(L: LoopSystem, budget: int = TABLE_BUDGET) -> DoomReport:
    g = build_graph(L, budget)

    def table_of(mask):
        return _set_table(L, [sem.state_at(L, int(i)) for i in np.flatnonzero(mask)])

    # States that can still reach an exit where the assertion holds.
    rescued = g.backward_some(g.ok_exit) >= 0
    head = None
    if g.init.any() and not (g.init & rescued).any():
        head = SafetyCertificate(table_of(g.forward(g.init)), "doomed-head")
    doomed_init = np.flatnonzero(g.init & ~rescued)
    state = None
    if len(doomed_init):
        x0 = int(doomed_init[0])
        start = np.zeros(g.n, dtype=bool)
        start[x0] = True
        state = SafetyCertificate(table_of(g.forward(start)), "doomed-state", sem.state_at(L, x0))
    keep = g.partial_danger()
    partial = None
    pinit = np.flatnonzero(g.init & keep)
    if len(pinit):
        partial = SafetyCertificate(table_of(keep), "partial-danger", sem.state_at(L, int(pinit[0])))
    run = _error_run(g)
    danger = danger_tables(L, *run) if run is not None else None
    return DoomReport(head, state, partial, danger)
