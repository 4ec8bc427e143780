"""Bounded exploration by explicit unwinding, and its dual certificate.

``unwind`` searches breadth-first from every initial state over every
nondeterministic choice, so the first counterexample it reports is a
shortest one; ties go to the earlier initial state and the earlier choice.
``cex_to_danger`` turns such a trace into a danger certificate whose
predicate is the disjunction of the trace's states.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr as E
from . import semantics as sem
from .certificate import DangerCertificate
from .errors import BudgetExceeded, NotSimple
from .loop import LoopSystem
from .semantics import State, Trace, TraceStatus

DEFAULT_FRONTIER_CAP = 1 << 22


@dataclass(frozen=True)
class Counterexample:
    trace: Trace
    choices: tuple[dict, ...]

    @property
    def depth(self) -> int:
        return len(self.trace) - 1


@dataclass(frozen=True)
class NoneWithinBound:
    k: int


def _error_mask(L: LoopSystem, cols, n) -> np.ndarray:
    c = sem.compiled(L)
    g = E.eval_columns(c.v_guard, cols, n).astype(bool)
    a = E.eval_columns(c.v_assert, cols, n).astype(bool)
    return ~g & ~a


def unwind(L: LoopSystem, k: int, cap: int = DEFAULT_FRONTIER_CAP,
           budget: int = sem.DEFAULT_BUDGET):
    """Search all runs of at most ``k`` iterations for a failing exit."""
    comp = sem.compiled(L)
    combos = sem.nondet_combos(L, limit=1 << 16)
    frontier = sem.initial_indices(L, budget)
    parent: dict[int, tuple[int, int] | None] = {int(i): None for i in frontier}

    def build(end: int) -> Counterexample:
        idx, picks = [end], []
        while parent[idx[-1]] is not None:
            p, j = parent[idx[-1]]
            picks.append(combos[j])
            idx.append(p)
        idx.reverse()
        picks.reverse()
        states = tuple(sem.state_at(L, i) for i in idx)
        return Counterexample(Trace(states, TraceStatus.COMPLETED, tuple(picks)), tuple(picks))

    if len(frontier):
        cols = sem.decode(L, frontier)
        bad = np.flatnonzero(_error_mask(L, cols, len(frontier)))
        if len(bad):
            return build(int(frontier[bad[0]]))
    for _ in range(k):
        if not len(frontier):
            break
        cols = sem.decode(L, frontier)
        n = len(frontier)
        inside = E.eval_columns(comp.v_guard, cols, n).astype(bool)
        live = frontier[inside]
        if not len(live):
            break
        sub = {v: cols[v][inside] for v in L.vars}
        m = len(live)
        succ = np.empty((m, len(combos)), dtype=np.int64)
        for j, nd in enumerate(combos):
            ndc = {name: np.int64(v) for name, v in nd.items()}
            succ[:, j] = sem.encode(L, sem.step_columns(L, sub, ndc, m))
        flat = succ.ravel()
        uniq, first = np.unique(flat, return_index=True)
        order = np.sort(first)
        fresh = []
        for pos in order:
            s = int(flat[pos])
            if s in parent:
                continue
            parent[s] = (int(live[pos // len(combos)]), int(pos % len(combos)))
            fresh.append(s)
        if len(parent) > cap:
            raise BudgetExceeded(f"unwinding visited more than {cap} states")
        frontier = np.array(fresh, dtype=np.int64)
        if len(frontier):
            bad = np.flatnonzero(_error_mask(L, sem.decode(L, frontier), len(frontier)))
            if len(bad):
                return build(int(frontier[bad[0]]))
    return NoneWithinBound(k)


def erase_loops(states, choices):
    """Remove cycles so that every state occurs once."""
    out_s: list[State] = []
    out_c: list[dict] = []
    where: dict[State, int] = {}
    for i, s in enumerate(states):
        if s in where:
            j = where[s]
            for t in out_s[j + 1:]:
                del where[t]
            del out_s[j + 1:]
            del out_c[j:]
        else:
            where[s] = len(out_s)
            out_s.append(s)
        if i < len(choices):
            out_c.append(choices[i])
    return out_s, out_c[:len(out_s) - 1]


def _cube(L: LoopSystem, s: State) -> E.Expr:
    parts = [E.compare("eq", E.var(v), E.const(x)) for v, x in zip(L.vars, s)]
    return parts[0] if len(parts) == 1 else E.and_(*parts)


def cex_to_danger(L: LoopSystem, cex: Counterexample, erase: bool = True) -> DangerCertificate:
    """Danger certificate describing exactly the states of a counterexample.

    ``R`` counts the remaining steps plus one, and each Skolem function
    replays the recorded choice at the corresponding state.
    """
    states = list(cex.trace.states)
    choices = list(cex.choices)
    if len(set(states)) != len(states):
        if not erase:
            raise NotSimple("counterexample revisits a state; enable loop erasure")
        states, choices = erase_loops(states, choices)
    n = len(states) - 1
    cubes = [_cube(L, s) for s in states]
    D = cubes[0] if len(cubes) == 1 else E.or_(*cubes)
    R: E.Expr = E.const(1)
    for i in range(n - 1, -1, -1):
        R = E.ite(cubes[i], E.const(n - i + 1), R)
    skolem = {}
    for site in L.sites:
        vals = [int(c.get(site.name, 0)) for c in choices]
        if len(set(vals)) <= 1:
            skolem[site.name] = E.const(vals[0] if vals else 0)
            continue
        N: E.Expr = E.const(0)
        for i in range(n - 1, -1, -1):
            N = E.ite(cubes[i], E.const(vals[i]), N)
        skolem[site.name] = N
    return DangerCertificate(D, R, skolem, states[0])
