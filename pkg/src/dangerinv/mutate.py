"""Seeded single-node mutations of danger certificates.

Every operator inverts the local meaning of one node: constants are
negated, comparisons negated, arithmetic operators exchanged, conjunction
and disjunction swapped, negations dropped, conditional branches swapped,
a variable replaced by another one, and one entry of a lookup table
flipped or negated.  A mutant is discarded when the mutated component
agrees with the original everywhere it is consulted (the predicate on all
states, the Skolem functions on predicate states inside the loop, the
ranking on those states and their chosen successors): such a mutant is the
same certificate in a different spelling.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from . import expr as E
from . import semantics as sem
from .certificate import DangerCertificate
from .expr import Expr
from .loop import LoopSystem

_ARITH_SWAP = {"add": "sub", "sub": "add", "mul": "add"}


def _nodes(e: Expr, path=()):
    yield path, e
    if e.op != "table":
        for i, a in enumerate(e.args):
            yield from _nodes(a, path + (i,))


def _replace_at(e: Expr, path, new: Expr) -> Expr:
    if not path:
        return new
    args = list(e.args)
    args[path[0]] = _replace_at(args[path[0]], path[1:], new)
    return replace(e, args=tuple(args))


def _mutations(node: Expr, names: tuple[str, ...], rng) -> Expr | None:
    op = node.op
    if op == "const":
        return E.const(-node.value if node.value != 0 else 1)
    if op == "bool":
        return E.boolean(not node.value)
    if op == "var":
        others = [v for v in names if v != node.value]
        return E.var(others[int(rng.integers(len(others)))]) if others else E.const(0)
    if op in _ARITH_SWAP:
        return Expr(_ARITH_SWAP[op], node.args)
    if op == "neg":
        return node.args[0]
    if op in E.COMPARE:
        return Expr(E.NEGATE[op], node.args)
    if op in ("and", "or"):
        return Expr("or" if op == "and" else "and", node.args)
    if op == "not":
        return node.args[0]
    if op == "ite":
        return Expr("ite", (node.args[0], node.args[2], node.args[1]))
    if op == "table":
        rows, default, sort = node.value
        k = int(rng.integers(len(rows) + 1))
        flip = (lambda v: int(not v)) if sort == E.BOOL else (lambda v: -v if v != 0 else 1)
        if k == len(rows):
            return Expr("table", node.args, (rows, flip(default), sort))
        key, val = rows[k]
        rows = rows[:k] + ((key, flip(val)),) + rows[k + 1:]
        return Expr("table", node.args, (rows, default, sort))
    return None


def _relevant(L: LoopSystem, c: DangerCertificate, name: str, cols, n) -> np.ndarray:
    """Rows of ``cols`` where component ``name`` of ``c`` can affect the check."""
    if name == "D":
        return np.ones(n, dtype=bool)
    comp = sem.compiled(L)
    inside = E.eval_columns(E.compile_vec(c.D, L.width), cols, n).astype(bool) & \
        E.eval_columns(comp.v_guard, cols, n).astype(bool)
    return inside


def _successor_cols(L: LoopSystem, c: DangerCertificate, cols, mask):
    sub = {v: cols[v][mask] for v in L.vars}
    m = int(mask.sum())
    nd, _ = sem.SkolemPlan(L, c.skolem).resolve_vec(sub, m)
    return sem.step_columns(L, sub, nd, m), m


def _same_where_used(L: LoopSystem, c: DangerCertificate, name: str, a: Expr, b: Expr) -> bool:
    wrap = name != "R"
    fa, fb = E.compile_vec(a, L.width, wrap), E.compile_vec(b, L.width, wrap)

    def agree(cols, n, mask=None) -> bool:
        va, vb = E.eval_columns(fa, cols, n), E.eval_columns(fb, cols, n)
        return bool(np.array_equal(va, vb) if mask is None else np.array_equal(va[mask], vb[mask]))

    for lo, hi in sem.chunk_ranges(L):
        cols = sem.columns(L, lo, hi)
        mask = _relevant(L, c, name, cols, hi - lo)
        if not agree(cols, hi - lo, mask):
            return False
        if name == "R" and mask.any():
            nxt, m = _successor_cols(L, c, cols, mask)
            if not agree(nxt, m):
                return False
    return True


def mutate(L: LoopSystem, c: DangerCertificate, seed: int, tries: int = 64) -> DangerCertificate:
    """One single-node mutant of ``(D, R, N)``, chosen by ``seed``."""
    rng = np.random.default_rng(seed)
    parts = [("D", c.D), ("R", c.R)] + [(k, e) for k, e in c.skolem.items()]
    sites = [(i, path, node) for i, (_, e) in enumerate(parts) for path, node in _nodes(e)]
    for _ in range(tries):
        i, path, node = sites[int(rng.integers(len(sites)))]
        new = _mutations(node, L.vars, rng)
        if new is None or new.sort != node.sort:
            continue
        name, old = parts[i]
        changed = _replace_at(old, path, new)
        if _same_where_used(L, c, name, old, changed):
            continue
        if name == "D":
            return replace(c, D=changed)
        if name == "R":
            return replace(c, R=changed)
        return replace(c, skolem={**c.skolem, name: changed})
    raise ValueError("no effective mutation found")


def mutants(L: LoopSystem, c: DangerCertificate, count: int = 20, seed: int = 0):
    return [mutate(L, c, seed + k) for k in range(count)]
