"""Concrete semantics of loop systems: states, steps, runs, enumeration.

States are tuples of signed ``width``-bit integers aligned with
``LoopSystem.vars``.  The global state order is lexicographic over the
variable vector (first variable most significant) with each value taken
in unsigned ascending order: ``0, 1, ..., 2**(w-1)-1, -2**(w-1), ..., -1``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Mapping

import numpy as np

from . import expr as E
from .errors import BudgetExceeded, GuardFalse
from .expr import Expr
from .loop import LoopSystem, NondetSite

State = tuple[int, ...]
DEFAULT_BUDGET = 1 << 24
DEFAULT_CHUNK = 1 << 18
MAX_COMBOS = 1 << 12


class TraceStatus(Enum):
    COMPLETED = "completed"
    TRUNCATED = "truncated"


@dataclass(frozen=True)
class Trace:
    states: tuple[State, ...]
    status: TraceStatus
    choices: tuple[dict, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if not self.states:
            raise ValueError("a trace has at least one state")

    def __len__(self) -> int:
        return len(self.states)

    @property
    def first(self) -> State:
        return self.states[0]

    @property
    def last(self) -> State:
        return self.states[-1]


# ---------------------------------------------------------------- compiled

class _Compiled:
    def __init__(self, L: LoopSystem):
        w = L.width
        self.s_init = E.compile_scalar(L.init, w)
        self.s_guard = E.compile_scalar(L.guard, w)
        self.s_assert = E.compile_scalar(L.assertion, w)
        self.s_updates = [E.compile_scalar(u, w) for u in L.updates]
        self.v_init = E.compile_vec(L.init, w)
        self.v_guard = E.compile_vec(L.guard, w)
        self.v_assert = E.compile_vec(L.assertion, w)
        self.v_updates = [E.compile_vec(u, w) for u in L.updates]


def compiled(L: LoopSystem) -> _Compiled:
    c = L.__dict__.get("_compiled")
    if c is None:
        c = _Compiled(L)
        object.__setattr__(L, "_compiled", c)
    return c


def env_of(L: LoopSystem, s: State, nd: Mapping[str, int] | None = None) -> dict[str, int]:
    env = dict(zip(L.vars, s))
    if nd:
        env.update(nd)
    return env


def holds_init(L: LoopSystem, s: State) -> bool:
    return bool(compiled(L).s_init(env_of(L, s)))


def holds_guard(L: LoopSystem, s: State) -> bool:
    return bool(compiled(L).s_guard(env_of(L, s)))


def holds_assert(L: LoopSystem, s: State) -> bool:
    return bool(compiled(L).s_assert(env_of(L, s)))


def is_error_exit(L: LoopSystem, s: State) -> bool:
    """The loop exits in ``s`` and the assertion fails there."""
    env = env_of(L, s)
    c = compiled(L)
    return not c.s_guard(env) and not c.s_assert(env)


def step(L: LoopSystem, s: State, nd: Mapping[str, int] | None = None) -> State:
    env = env_of(L, s, nd)
    c = compiled(L)
    if not c.s_guard(env):
        raise GuardFalse(f"guard is false in {format_state(L, s)}")
    for site in L.sites:
        env.setdefault(site.name, 0)
    return tuple(u(env) for u in c.s_updates)


def nondet_combos(L: LoopSystem, limit: int = MAX_COMBOS) -> list[dict[str, int]]:
    """All nondet assignments for one step, in enumeration order."""
    total = 1
    for s in L.sites:
        total *= 1 << s.bits
    if total > limit:
        raise BudgetExceeded(f"{total} nondet combinations per step exceed {limit}")
    domains = [s.domain(L.width) for s in L.sites]
    names = [s.name for s in L.sites]
    return [dict(zip(names, vals)) for vals in itertools.product(*domains)]


def successors(L: LoopSystem, s: State, limit: int = MAX_COMBOS) -> list[tuple[dict, State]]:
    """Every (choice, successor) pair of a guard state, in choice order."""
    return [(nd, step(L, s, nd)) for nd in nondet_combos(L, limit)]


# ---------------------------------------------------------- Skolem choices

class SkolemPlan:
    """Turns a Skolem map into per-state nondet choices.

    Keys naming a nondet site give that site's value directly (1-bit sites
    read the value as a truth value).  Keys naming a variable give the
    intended successor value of that variable; the remaining sites are then
    chosen as the first combination, in enumeration order, that realises
    every such target.  ``feasible`` is false where no combination does.
    """

    def __init__(self, L: LoopSystem, skolem: Mapping[str, Expr]):
        self.L = L
        w = L.width
        site_names = {s.name for s in L.sites}
        for key in skolem:
            if key not in site_names and key not in L.vars:
                raise KeyError(f"Skolem key {key!r} is neither a nondet site nor a variable")
        self.direct = [(s, E.compile_vec(skolem[s.name], w), E.compile_scalar(skolem[s.name], w))
                       for s in L.sites if s.name in skolem]
        self.targets = [(L.index(v), E.compile_vec(skolem[v], w), E.compile_scalar(skolem[v], w),
                         skolem[v].sort)
                        for v in L.vars if v in skolem]
        self.free = [s for s in L.sites if s.name not in skolem]
        target_names = {L.vars[i] for i, *_ in self.targets}
        options = []
        for s in self.free:
            if s.bits == 1:
                options.append(["0", "1"])
            elif s.target in target_names:
                options.append(["target"])
            else:
                options.append(["0"])
        self.options = options
        combos = 1
        for o in options:
            combos *= len(o)
        if combos > MAX_COMBOS:
            raise BudgetExceeded("too many nondet combinations to resolve Skolem targets")

    @staticmethod
    def _site_value(site: NondetSite, v, width: int):
        if site.bits == 1:
            return (np.asarray(v) != 0).astype(np.int64)
        return E.wrap_int(np.asarray(v, dtype=np.int64), width)

    def resolve_vec(self, cols: Mapping[str, np.ndarray], n: int):
        L, w = self.L, self.L.width
        c = compiled(L)
        nd: dict[str, np.ndarray] = {}
        for site, fn, _ in self.direct:
            nd[site.name] = np.broadcast_to(self._site_value(site, fn(cols), w), (n,))
        if not self.targets:
            for site in self.free:
                nd[site.name] = np.zeros(n, dtype=np.int64)
            return nd, np.ones(n, dtype=bool)
        wanted = []
        for i, fn, _, sort in self.targets:
            t = fn(cols)
            if sort == E.BOOL:
                t = np.asarray(t).astype(np.int64)
            wanted.append((i, np.broadcast_to(E.wrap_int(np.asarray(t, dtype=np.int64), w), (n,))))
        by_name = {L.vars[i]: t for i, t in wanted}
        found = np.zeros(n, dtype=bool)
        chosen = {s.name: np.zeros(n, dtype=np.int64) for s in self.free}
        for combo in itertools.product(*self.options):
            trial = dict(cols)
            trial.update(nd)
            vals = {}
            for site, opt in zip(self.free, combo):
                vals[site.name] = by_name[site.target] if opt == "target" else np.int64(int(opt))
            trial.update(vals)
            match = ~found
            for i, t in wanted:
                match = match & (E.eval_columns(c.v_updates[i], trial, n) == t)
            if match.any():
                for name, v in vals.items():
                    chosen[name] = np.where(match, v, chosen[name])
                found |= match
            if found.all():
                break
        nd.update(chosen)
        return nd, found

    def resolve(self, s: State) -> tuple[dict[str, int], bool]:
        L, w = self.L, self.L.width
        c = compiled(L)
        env = env_of(L, s)
        nd = {}
        for site, _, fn in self.direct:
            v = fn(env)
            nd[site.name] = int(v != 0) if site.bits == 1 else E.wrap_int(int(v), w)
        if not self.targets:
            for site in self.free:
                nd[site.name] = 0
            return nd, True
        wanted = [(i, E.wrap_int(int(fn(env)), w)) for i, _, fn, _ in self.targets]
        by_name = {L.vars[i]: t for i, t in wanted}
        for combo in itertools.product(*self.options):
            vals = {site.name: by_name[site.target] if opt == "target" else int(opt)
                    for site, opt in zip(self.free, combo)}
            trial = {**env, **nd, **vals}
            if all(c.s_updates[i](trial) == t for i, t in wanted):
                nd.update(vals)
                return nd, True
        nd.update({site.name: by_name[site.target] if opts[0] == "target" else int(opts[0])
                   for site, opts in zip(self.free, self.options)})
        return nd, False


def run(L: LoopSystem, x0: State, skolem: Mapping[str, Expr] | SkolemPlan | None = None,
        max_steps: int = 1 << 20) -> Trace:
    """Iterate the loop from ``x0`` resolving nondeterminism by ``skolem``."""
    plan = skolem if isinstance(skolem, SkolemPlan) else SkolemPlan(L, skolem or {})
    c = compiled(L)
    states = [tuple(x0)]
    choices = []
    s = states[0]
    while c.s_guard(env_of(L, s)):
        if len(choices) >= max_steps:
            return Trace(tuple(states), TraceStatus.TRUNCATED, tuple(choices))
        nd, _ = plan.resolve(s)
        s = step(L, s, nd)
        states.append(s)
        choices.append(nd)
    return Trace(tuple(states), TraceStatus.COMPLETED, tuple(choices))


def replay(L: LoopSystem, x0: State, choices) -> Trace:
    """Re-execute recorded choices; stops early if the guard turns false."""
    states = [tuple(x0)]
    for nd in choices:
        if not holds_guard(L, states[-1]):
            break
        states.append(step(L, states[-1], nd))
    status = TraceStatus.TRUNCATED if holds_guard(L, states[-1]) else TraceStatus.COMPLETED
    return Trace(tuple(states), status, tuple(choices[:len(states) - 1]))


# ------------------------------------------------------------- enumeration

def _check_budget(L: LoopSystem, budget: int) -> None:
    if L.state_count > budget:
        raise BudgetExceeded(
            f"{L.nvars} variables x {L.width} bits = 2^{L.nvars * L.width} states "
            f"exceed the enumeration budget of {budget}")


def to_signed(u, width: int):
    half = 1 << (width - 1)
    return np.where(u >= half, u - (1 << width), u) if isinstance(u, np.ndarray) else (
        u - (1 << width) if u >= half else u)


def enumerate_states(L: LoopSystem, budget: int = DEFAULT_BUDGET) -> Iterator[State]:
    _check_budget(L, budget)
    dom = [to_signed(u, L.width) for u in range(1 << L.width)]
    return itertools.product(dom, repeat=L.nvars)


def decode(L: LoopSystem, idx: np.ndarray) -> dict[str, np.ndarray]:
    w = L.width
    mask = (1 << w) - 1
    cols = {}
    for j, v in enumerate(L.vars):
        shift = w * (L.nvars - 1 - j)
        cols[v] = to_signed((idx >> shift) & mask, w)
    return cols


def state_index(L: LoopSystem, s: State) -> int:
    w = L.width
    mask = (1 << w) - 1
    idx = 0
    for v in s:
        idx = (idx << w) | (v & mask)
    return idx


def state_at(L: LoopSystem, idx: int) -> State:
    w = L.width
    mask = (1 << w) - 1
    return tuple(int(to_signed((idx >> (w * (L.nvars - 1 - j))) & mask, w))
                 for j in range(L.nvars))


def encode(L: LoopSystem, cols: Mapping[str, np.ndarray]) -> np.ndarray:
    w = L.width
    mask = np.int64((1 << w) - 1)
    idx = None
    for v in L.vars:
        part = np.asarray(cols[v], dtype=np.int64) & mask
        idx = part if idx is None else (idx << np.int64(w)) | part
    return idx


def chunk_ranges(L: LoopSystem, chunk: int = DEFAULT_CHUNK, budget: int = DEFAULT_BUDGET):
    _check_budget(L, budget)
    total = L.state_count
    return [(lo, min(lo + chunk, total)) for lo in range(0, total, chunk)]


def columns(L: LoopSystem, lo: int, hi: int) -> dict[str, np.ndarray]:
    return decode(L, np.arange(lo, hi, dtype=np.int64))


def step_columns(L: LoopSystem, cols: Mapping[str, np.ndarray], nd: Mapping[str, np.ndarray],
                 n: int) -> dict[str, np.ndarray]:
    env = dict(cols)
    env.update(nd)
    c = compiled(L)
    return {v: E.eval_columns(u, env, n).astype(np.int64) for v, u in zip(L.vars, c.v_updates)}


def initial_indices(L: LoopSystem, budget: int = DEFAULT_BUDGET, limit: int | None = None) -> np.ndarray:
    """Indices of all initial states in the global order (optionally capped)."""
    key = ("_init_idx", budget, limit)
    cache = L.__dict__.setdefault("_cache", {}) if "_cache" in L.__dict__ else None
    if cache is None:
        object.__setattr__(L, "_cache", {})
        cache = L.__dict__["_cache"]
    if key in cache:
        return cache[key]
    c = compiled(L)
    found = []
    count = 0
    for lo, hi in chunk_ranges(L, budget=budget):
        cols = columns(L, lo, hi)
        mask = E.eval_columns(c.v_init, cols, hi - lo).astype(bool)
        hits = np.nonzero(mask)[0] + lo
        found.append(hits)
        count += len(hits)
        if limit is not None and count >= limit:
            break
    out = np.concatenate(found) if found else np.zeros(0, dtype=np.int64)
    if limit is not None:
        out = out[:limit]
    cache[key] = out
    return out


def initial_states(L: LoopSystem, budget: int = DEFAULT_BUDGET, limit: int | None = None) -> list[State]:
    return [state_at(L, int(i)) for i in initial_indices(L, budget, limit)]


def format_state(L: LoopSystem, s: State, only_source: bool = False) -> str:
    names = L.source_vars if only_source else L.vars
    return ", ".join(f"{v}={s[L.index(v)]}" for v in names)
