"""Counterexample-guided synthesis of danger and safety certificates.

Candidates are visited in a fixed order: total node count first, then the
predicate, the Skolem functions and the ranking function, each in bank
order.  A candidate is first tested against the recorded counterexample
inputs; only survivors reach the exhaustive verifier, whose first witness
becomes a new input.  Because inputs only ever remove candidates that the
verifier would reject anyway, the candidate returned is the first one in
the order that passes full verification, independent of the inputs seen.

Danger candidates are verified in stages that each depend on fewer
components: the predicate alone (exit condition and an initial state),
then predicate and Skolem functions (inductiveness), then the ranking
function (the full certificate check).
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .. import expr as E
from .. import semantics as sem
from ..certificate import (DangerCertificate, SafetyCertificate, Verdict, _run_chunks,
                           check_danger, check_safety, extract_trace)
from ..errors import DangerInvError
from ..expr import BOOL, INT
from ..loop import LoopSystem
from ..result import DangerProved, SafetyProved, Unknown
from ..semantics import State
from .bank import ExprBank
from .grammar import Grammar, for_loop

MODES = ("danger", "safety", "gs")
STRATEGIES = ("enum", "stochastic")
INIT_SAMPLE = 32


class GrammarExhausted(DangerInvError):
    """No candidate within the grammar bounds satisfies the inputs."""


class _Timeout(Exception):
    pass


class _OutOfIterations(Exception):
    pass


@dataclass
class Budget:
    max_iterations: int | None = None  # exhaustive verifier calls
    timeout: float | None = None       # wall-clock seconds
    seed: int = 0
    strategy: str = "enum"
    jobs: int = 1


@dataclass
class CegisState:
    """Counterexample inputs gathered so far and the latest candidate.

    The input lists hold concrete states by role: ``negative`` states must
    falsify the predicate, ``positive`` states must satisfy it, ``implications``
    are pairs whose first state forces the second (safety), and
    ``transitions`` are loop states whose chosen step must be ranked and
    stay inside the predicate (danger).
    """
    mode: str
    negative: list[State] = field(default_factory=list)
    positive: list[State] = field(default_factory=list)
    implications: list[tuple[State, State]] = field(default_factory=list)
    transitions: list[State] = field(default_factory=list)
    candidate: object = None
    iterations: int = 0
    seed: int = 0
    inputs: list[tuple] = field(default_factory=list)

    def record(self, role: str, *states: State) -> None:
        key = (role, *(tuple(s) for s in states))
        if key in self.inputs:
            raise AssertionError(f"counterexample {key} was already an input")
        self.inputs.append(key)

    def check_consistent(self) -> None:
        clash = set(map(tuple, self.positive)) & set(map(tuple, self.negative))
        if clash:
            raise GrammarExhausted(f"contradictory inputs at {sorted(clash)[0]}")


@dataclass(frozen=True)
class Ok:
    pass


@dataclass(frozen=True)
class CounterexampleInput:
    state: State
    criterion: str
    successor: State | None = None


def verif_step(L: LoopSystem, candidate, jobs: int = 1):
    """Exhaustively check a candidate; return Ok or its first counterexample."""
    if isinstance(candidate, DangerCertificate):
        v = check_danger(L, candidate, jobs=jobs)
    else:
        v = check_safety(L, candidate, jobs=jobs)
    return _as_input(v)


def _as_input(v: Verdict):
    if v.ok:
        return Ok()
    states = v.witness_states()
    if not states:
        return CounterexampleInput((), v.criterion)
    return CounterexampleInput(states[0], v.criterion, states[1] if len(states) > 1 else None)


# --------------------------------------------------------------- workspace

def _sample_states(L: LoopSystem, g: Grammar) -> np.ndarray:
    """Deterministic states used for observational equivalence."""
    if L.state_count <= 256:
        return np.arange(L.state_count, dtype=np.int64)
    w = L.width
    lo, hi = -(1 << (w - 1)), (1 << (w - 1)) - 1
    special = []
    for c in (*g.pool(w), lo, hi):
        for d in (0, 1, -1):
            v = int(E.wrap_int(c + d, w))
            if v not in special:
                special.append(v)
    picks = [int(i) for i in sem.initial_indices(L, limit=16)]
    combos = list(itertools.product(special, repeat=L.nvars))
    rng = np.random.default_rng(0)
    budget = max(g.sample_size - len(picks), 0)
    if len(combos) > budget // 2:
        sel = rng.choice(len(combos), size=budget // 2, replace=False)
        combos = [combos[i] for i in sorted(sel)]
    picks += [sem.state_index(L, s) for s in combos]
    while len(dict.fromkeys(picks)) < g.sample_size and len(dict.fromkeys(picks)) < L.state_count:
        picks.append(int(rng.integers(0, L.state_count)))
    return np.array(list(dict.fromkeys(picks))[:g.sample_size], dtype=np.int64)


class Workspace:
    """Shared expression banks and the pool of counterexample states."""

    def __init__(self, L: LoopSystem, g: Grammar):
        self.L = L
        self.g = g
        sample = sem.decode(L, _sample_states(L, g))
        w = L.width
        self.wbank = ExprBank(L.vars, w, True, g.pool(w), g.int_ops, g.bool_ops, sample,
                              g.level_cap)
        self.rbank = ExprBank(L.vars, w, False, g.pool(w), g.int_ops, g.bool_ops, sample,
                              g.level_cap)
        self.states: list[State] = []
        self.index: dict[State, int] = {}
        self.guard = np.zeros(0, dtype=bool)
        comp = sem.compiled(L)
        self._guard_fn = comp.v_guard

    def add(self, states) -> list[int]:
        new = []
        out = []
        for s in states:
            s = tuple(int(v) for v in s)
            if s not in self.index:
                self.index[s] = len(self.states) + len(new)
                new.append(s)
            out.append(self.index[s])
        if new:
            cols = {v: np.array([s[j] for s in new], dtype=np.int64) for j, v in enumerate(self.L.vars)}
            self.states.extend(new)
            self.wbank.add_points(cols)
            self.rbank.add_points(cols)
            g = E.eval_columns(self._guard_fn, cols, len(new)).astype(bool)
            self.guard = np.concatenate([self.guard, g])
        return out

    def cols(self, idx) -> dict[str, np.ndarray]:
        idx = np.asarray(idx, dtype=np.int64)
        return {v: self.wbank.pool[v][idx] for v in self.L.vars}


class _Clock:
    def __init__(self, budget: Budget, cs_list):
        self.deadline = None if budget.timeout is None else time.monotonic() + budget.timeout
        self.max_iterations = budget.max_iterations
        self.cs_list = cs_list

    def tick(self) -> None:
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise _Timeout()

    def verify(self, cs: CegisState) -> None:
        """Account for one exhaustive verifier call."""
        self.tick()
        used = sum(c.iterations for c in self.cs_list)
        if self.max_iterations is not None and used >= self.max_iterations:
            raise _OutOfIterations()
        cs.iterations += 1


def _compositions(total: int, parts: int, cap: int):
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(1, min(cap, total - parts + 1) + 1):
        for rest in _compositions(total - first, parts - 1, cap):
            yield (first,) + rest


# ----------------------------------------------------------- danger search

class DangerSearch:
    def __init__(self, L: LoopSystem, g: Grammar, ws: Workspace, cs: CegisState,
                 clock: _Clock | None, verify: bool = True, jobs: int = 1):
        self.L, self.g, self.ws, self.cs = L, g, ws, cs
        self.clock = clock
        self.verify = verify
        self.jobs = jobs
        self.comp = sem.compiled(L)
        self.init_list = sem.initial_states(L, limit=INIT_SAMPLE)
        self.init_idx = np.array(ws.add(self.init_list), dtype=np.int64)
        self.init_capped = len(self.init_list) >= INIT_SAMPLE
        self.neg_idx = np.array(ws.add(cs.negative), dtype=np.int64)
        self.pos_idx = np.array(ws.add(cs.positive), dtype=np.int64)
        self.trans_idx = list(ws.add(cs.transitions))
        self.d_memo: dict[int, State | None] = {}
        self.n_memo: dict[tuple, bool] = {}
        self._d_fns: dict[int, object] = {}
        self.site_sorts = [BOOL if s.bits == 1 else INT for s in L.sites]

    # helpers
    def _d_fn(self, d: int):
        f = self._d_fns.get(d)
        if f is None:
            f = self._d_fns[d] = E.compile_vec(self.ws.wbank.exprs[d], self.L.width)
        return f

    def _skolem(self, ntuple) -> dict:
        X = self.ws.wbank.exprs
        return {s.name: X[n] for s, n in zip(self.L.sites, ntuple)}

    def _tick(self):
        if self.clock is not None:
            self.clock.tick()

    def _add_input(self, role: str, s: State) -> int:
        (i,) = self.ws.add([s])
        self.cs.record(role, s)
        if role == "negative":
            self.cs.negative.append(tuple(s))
            self.neg_idx = np.append(self.neg_idx, i)
        else:
            self.cs.transitions.append(tuple(s))
            self.trans_idx.append(i)
        return i

    # stage 1: the predicate alone
    def d_ok(self, d: int) -> State | None:
        if d in self.d_memo:
            return self.d_memo[d]
        self._tick()
        row = self.ws.wbank.pts[d]
        x0 = None
        if (len(self.neg_idx) and row[self.neg_idx].any()) or \
                (len(self.pos_idx) and not row[self.pos_idx].all()):
            self.d_memo[d] = None
            return None
        hits = np.flatnonzero(row[self.init_idx]) if len(self.init_idx) else []
        if len(hits):
            x0 = self.init_list[int(hits[0])]
        elif self.init_capped:
            from ..certificate import _first_initial_in
            x0 = _first_initial_in(self.L, self._d_fn(d), sem.DEFAULT_BUDGET)
        if x0 is None:
            self.d_memo[d] = None
            return None
        if self.verify:
            self.clock.verify(self.cs)
            bad = self._first_exit_violation(d)
            if bad is not None:
                self._add_input("negative", bad)
                self.d_memo[d] = None
                return None
        self.d_memo[d] = x0
        return x0

    def _first_exit_violation(self, d: int) -> State | None:
        L, comp, d_fn = self.L, self.comp, self._d_fn(d)

        def scan(lo, hi):
            n = hi - lo
            cols = sem.columns(L, lo, hi)
            m = E.eval_columns(d_fn, cols, n).astype(bool) & \
                ~E.eval_columns(comp.v_guard, cols, n).astype(bool) & \
                E.eval_columns(comp.v_assert, cols, n).astype(bool)
            k = np.flatnonzero(m)
            return None if not len(k) else tuple(int(cols[v][k[0]]) for v in L.vars)
        return _run_chunks(L, scan, self.jobs, sem.DEFAULT_BUDGET, sem.DEFAULT_CHUNK)

    # stage 2: predicate and Skolem functions
    def _transitions(self, d: int):
        if not self.trans_idx:
            return np.zeros(0, dtype=np.int64)
        t = np.array(self.trans_idx, dtype=np.int64)
        row = self.ws.wbank.pts[d]
        return t[(row[t] != 0) & self.ws.guard[t]]

    def _succ_at(self, ntuple, t):
        nd = {}
        for site, n in zip(self.L.sites, ntuple):
            v = self.ws.wbank.pts[n][t]
            nd[site.name] = (v != 0).astype(np.int64) if site.bits == 1 else v
        return sem.step_columns(self.L, self.ws.cols(t), nd, len(t))

    def n_ok(self, d: int, ntuple) -> bool:
        key = (d, ntuple)
        if key in self.n_memo:
            return self.n_memo[key]
        self._tick()
        t = self._transitions(d)
        if len(t):
            nxt = self._succ_at(ntuple, t)
            if not E.eval_columns(self._d_fn(d), nxt, len(t)).astype(bool).all():
                self.n_memo[key] = False
                return False
        if self.verify:
            self.clock.verify(self.cs)
            bad = self._first_inductive_violation(d, ntuple)
            if bad is not None:
                self._add_input("transition", bad)
                self.n_memo[key] = False
                return False
        self.n_memo[key] = True
        return True

    def _first_inductive_violation(self, d: int, ntuple) -> State | None:
        L, comp, d_fn = self.L, self.comp, self._d_fn(d)
        plan = sem.SkolemPlan(L, self._skolem(ntuple))

        def scan(lo, hi):
            n = hi - lo
            cols = sem.columns(L, lo, hi)
            inside = np.flatnonzero(E.eval_columns(d_fn, cols, n).astype(bool) &
                                    E.eval_columns(comp.v_guard, cols, n).astype(bool))
            if not len(inside):
                return None
            sub = {v: cols[v][inside] for v in L.vars}
            m = len(inside)
            nd, feasible = plan.resolve_vec(sub, m)
            nxt = sem.step_columns(L, sub, nd, m)
            bad = ~feasible | ~E.eval_columns(d_fn, nxt, m).astype(bool)
            k = np.flatnonzero(bad)
            return None if not len(k) else tuple(int(sub[v][k[0]]) for v in L.vars)
        return _run_chunks(L, scan, self.jobs, sem.DEFAULT_BUDGET, sem.DEFAULT_CHUNK)

    # stage 3: ranking function
    def r_candidates(self, d: int, ntuple, size: int, x0: State) -> Iterator[DangerCertificate]:
        bank = self.ws.rbank
        ids = bank.ids(INT, size)
        if not len(ids):
            return
        lo, hi = ids.start, ids.stop
        version = -1
        for r in ids:
            self._tick()
            if version != len(self.trans_idx):
                version = len(self.trans_idx)
                t = self._transitions(d)
                if len(t):
                    nxt = self._succ_at(ntuple, t)
                    now = bank.pts[lo:hi][:, t]
                    after = bank.eval_points(nxt, len(t), upto=hi)[lo:hi]
                    good = ((now > 0) & (after < now)).all(axis=1)
                else:
                    good = np.ones(hi - lo, dtype=bool)
            if not good[r - lo]:
                continue
            cert = DangerCertificate(self.ws.wbank.exprs[d], bank.exprs[r],
                                     self._skolem(ntuple), x0)
            if not self.verify:
                yield cert
                continue
            self.clock.verify(self.cs)
            v = check_danger(self.L, cert, jobs=self.jobs)
            if v.ok:
                yield cert
                return
            if v.criterion not in ("rank-positive", "rank-decrease"):
                raise RuntimeError(f"stage checks missed a {v.criterion} violation")
            self._add_input("transition", v.witness_states()[0])
            good[r - lo] = False

    def levels(self) -> Iterator[DangerCertificate | None]:
        """Yield certificates (verified unless ``verify`` is off); ``None`` ends a size level."""
        g = self.g
        ns = len(self.L.sites)
        for T in range(1, g.total + 1):
            for sD in range(1, min(g.max_size, T - ns - 1) + 1):
                for d in self.ws.wbank.ids(BOOL, sD):
                    x0 = self.d_ok(d)
                    if x0 is None:
                        continue
                    rest = T - sD
                    for sN in range(ns, rest):
                        sR = rest - sN
                        if sR > g.max_size:
                            continue
                        for parts in _compositions(sN, ns, g.max_size):
                            pools = [self.ws.wbank.ids(sort, k)
                                     for sort, k in zip(self.site_sorts, parts)]
                            for ntuple in itertools.product(*pools):
                                if not self.n_ok(d, ntuple):
                                    continue
                                yield from self.r_candidates(d, ntuple, sR, x0)
            yield None

    def random_candidates(self, rng) -> Iterator[DangerCertificate | None]:
        g = self.g
        bank = self.ws.wbank
        count = 0
        while True:
            count += 1
            if count % 64 == 0:
                yield None
            sD = int(rng.integers(1, g.max_size + 1))
            dl = bank.ids(BOOL, sD)
            if not len(dl):
                continue
            d = dl[int(rng.integers(len(dl)))]
            x0 = self.d_ok(d)
            if x0 is None:
                continue
            ntuple = []
            for sort in self.site_sorts:
                lvl = bank.ids(sort, int(rng.integers(1, g.max_size + 1)))
                if not len(lvl):
                    break
                ntuple.append(lvl[int(rng.integers(len(lvl)))])
            if len(ntuple) != len(self.site_sorts) or not self.n_ok(d, tuple(ntuple)):
                continue
            sR = int(rng.integers(1, g.max_size + 1))
            yield from self.r_candidates(d, tuple(ntuple), sR, x0)


# ----------------------------------------------------------- safety search

class SafetySearch:
    def __init__(self, L: LoopSystem, g: Grammar, ws: Workspace, cs: CegisState,
                 clock: _Clock | None, verify: bool = True, jobs: int = 1):
        self.L, self.g, self.ws, self.cs = L, g, ws, cs
        self.clock = clock
        self.verify = verify
        self.jobs = jobs
        self.pos = list(ws.add(cs.positive))
        self.neg = list(ws.add(cs.negative))
        self.imp = [tuple(ws.add(p)) for p in cs.implications]
        self._arrays()

    def _arrays(self):
        self.pos_a = np.array(self.pos, dtype=np.int64)
        self.neg_a = np.array(self.neg, dtype=np.int64)
        self.imp_a = np.array(self.imp, dtype=np.int64).reshape(-1, 2)

    def consistent(self, s: int) -> bool:
        row = self.ws.wbank.pts[s]
        if len(self.pos_a) and not row[self.pos_a].all():
            return False
        if len(self.neg_a) and row[self.neg_a].any():
            return False
        if len(self.imp_a) and (row[self.imp_a[:, 0]] > row[self.imp_a[:, 1]]).any():
            return False
        return True

    def try_candidate(self, s: int) -> SafetyCertificate | None:
        if self.clock is not None:
            self.clock.tick()
        if not self.consistent(s):
            return None
        cert = SafetyCertificate(self.ws.wbank.exprs[s])
        if not self.verify:
            return cert
        self.clock.verify(self.cs)
        v = check_safety(self.L, cert, jobs=self.jobs)
        if v.ok:
            return cert
        states = v.witness_states()
        if v.criterion == "base":
            (i,) = self.ws.add([states[0]])
            self.cs.record("positive", states[0])
            self.cs.positive.append(states[0])
            self.pos.append(i)
        elif v.criterion == "exit":
            (i,) = self.ws.add([states[0]])
            self.cs.record("negative", states[0])
            self.cs.negative.append(states[0])
            self.neg.append(i)
        else:
            a, b = self.ws.add(states[:2])
            self.cs.record("implication", states[0], states[1])
            self.cs.implications.append((states[0], states[1]))
            self.imp.append((a, b))
        self._arrays()
        return None

    def levels(self) -> Iterator[SafetyCertificate | None]:
        for T in range(1, self.g.max_size + 1):
            for s in self.ws.wbank.ids(BOOL, T):
                cert = self.try_candidate(s)
                if cert is not None:
                    yield cert
                    if self.verify:
                        return
            yield None

    def random_candidates(self, rng) -> Iterator[SafetyCertificate | None]:
        count = 0
        while True:
            count += 1
            if count % 64 == 0:
                yield None
            lvl = self.ws.wbank.ids(BOOL, int(rng.integers(1, self.g.max_size + 1)))
            if not len(lvl):
                continue
            cert = self.try_candidate(lvl[int(rng.integers(len(lvl)))])
            if cert is not None:
                yield cert
                return


# ------------------------------------------------------------------ driver

def synth_step(L: LoopSystem, cs: CegisState, g: Grammar | None = None):
    """Smallest candidate consistent with the recorded inputs (no verification)."""
    g = g or for_loop(L)
    cs.check_consistent()
    ws = Workspace(L, g)
    if cs.mode == "safety":
        search = SafetySearch(L, g, ws, cs, None, verify=False)
    elif cs.mode == "danger":
        search = DangerSearch(L, g, ws, cs, None, verify=False)
    else:
        raise ValueError("synth_step needs mode 'danger' or 'safety'")
    for cand in search.levels():
        if cand is not None:
            cs.candidate = cand
            return cand
    raise GrammarExhausted(f"no candidate up to size {g.total}")


def cegis(L: LoopSystem, g: Grammar | None = None, mode: str = "gs",
          budget: Budget | None = None):
    """Alternate synthesis and exhaustive verification until a proof is found."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    g = g or for_loop(L)
    budget = budget or Budget()
    if budget.strategy not in STRATEGIES:
        raise ValueError(f"strategy must be one of {STRATEGIES}")
    start = time.monotonic()
    states = {}
    if mode in ("danger", "gs"):
        states["danger"] = CegisState("danger", seed=budget.seed)
    if mode in ("safety", "gs"):
        states["safety"] = CegisState("safety", seed=budget.seed)
    clock = _Clock(budget, list(states.values()))

    def total_iterations():
        return sum(c.iterations for c in states.values())

    def stats():
        return {"seconds": time.monotonic() - start,
                **{f"{k}_inputs": len(c.inputs) for k, c in states.items()}}

    if g.max_size < 1 or g.total < 1:
        return Unknown("grammar-exhausted", 0, stats())
    try:
        ws = Workspace(L, g)
        gens = []
        rng = np.random.default_rng(budget.seed)
        if "safety" in states:
            s = SafetySearch(L, g, ws, states["safety"], clock, jobs=budget.jobs)
            gens.append(s.levels() if budget.strategy == "enum" else s.random_candidates(rng))
        if "danger" in states:
            d = DangerSearch(L, g, ws, states["danger"], clock, jobs=budget.jobs)
            gens.append(d.levels() if budget.strategy == "enum" else d.random_candidates(rng))
        active = list(gens)
        random_rounds = 0
        while active:
            for gen in list(active):
                for cand in gen:
                    if cand is None:
                        break
                    return _finish(L, cand, total_iterations(), stats())
                else:
                    active.remove(gen)
            if budget.strategy == "stochastic" and budget.max_iterations is None \
                    and budget.timeout is None:
                random_rounds += 1
                if random_rounds > 2000:
                    return Unknown("budget", total_iterations(), stats())
    except _Timeout:
        return Unknown("timeout", total_iterations(), stats())
    except _OutOfIterations:
        return Unknown("budget", total_iterations(), stats())
    except GrammarExhausted:
        return Unknown("grammar-exhausted", total_iterations(), stats())
    return Unknown("grammar-exhausted", total_iterations(), stats())


def _finish(L: LoopSystem, cand, iterations: int, stats: dict):
    """Re-validate independently before reporting a proof."""
    if isinstance(cand, DangerCertificate):
        v = check_danger(L, cand)
        if not v.ok:
            raise RuntimeError(f"synthesised certificate failed re-validation: {v.describe(L)}")
        return DangerProved(cand, extract_trace(L, cand), iterations, stats)
    v = check_safety(L, cand)
    if not v.ok:
        raise RuntimeError(f"synthesised invariant failed re-validation: {v.describe(L)}")
    return SafetyProved(cand, iterations, stats)
