"""Direct interpreter for parsed programs.

This deliberately ignores :mod:`dangerinv.loop`: it walks the statement
tree, forks on every ``*`` and tracks ``break`` and failing assertions as
control outcomes.  Tests use it as an independent reference for the
desugared transition system and for exact reachability.
"""

from __future__ import annotations

from collections import deque
from typing import Iterator, Mapping

from . import expr as E
from .syntax import NONDET, Assert, Assign, Block, Break, If, SourceProgram, Stmt
from .loop import apply_subst

NORMAL, BREAK, ERROR = "normal", "break", "error"
Env = tuple[int, ...]


class Interpreter:
    def __init__(self, prog: SourceProgram, width: int, subst: Mapping[int, int] | None = None):
        self.prog = apply_subst(prog, subst)
        self.width = width
        self.vars = self.prog.variables
        half = 1 << (width - 1)
        self.values = [u - (1 << width) if u >= half else u for u in range(1 << width)]

    def _eval(self, e, env: dict):
        return E.evaluate(e, env, self.width)

    def initial(self) -> Iterator[Env]:
        """Initial loop-head states, declarations evaluated in order."""
        def go(i: int, env: dict):
            if i == len(self.prog.decls):
                if self.prog.assume is None or self._eval(self.prog.assume, env):
                    yield tuple(env[v] for v in self.vars)
                return
            d = self.prog.decls[i]
            if isinstance(d.init, E.Expr):
                yield from go(i + 1, {**env, d.name: self._eval(d.init, env)})
            else:
                for v in self.values:
                    yield from go(i + 1, {**env, d.name: v})
        yield from go(0, {})

    def _exec(self, s: Stmt, env: dict) -> Iterator[tuple[str, dict]]:
        if isinstance(s, Block):
            def seq(i, env):
                if i == len(s.stmts):
                    yield NORMAL, env
                    return
                for out, env2 in self._exec(s.stmts[i], env):
                    if out == NORMAL:
                        yield from seq(i + 1, env2)
                    else:
                        yield out, env2
            yield from seq(0, env)
        elif isinstance(s, Assign):
            if s.value is NONDET:
                for v in self.values:
                    yield NORMAL, {**env, s.name: v}
            else:
                yield NORMAL, {**env, s.name: self._eval(s.value, env)}
        elif isinstance(s, Break):
            yield BREAK, env
        elif isinstance(s, Assert):
            yield (NORMAL if self._eval(s.cond, env) else ERROR), env
        elif isinstance(s, If):
            branches = [True, False] if s.cond is NONDET else [bool(self._eval(s.cond, env))]
            for b in branches:
                if b:
                    yield from self._exec(s.then, env)
                elif s.orelse is not None:
                    yield from self._exec(s.orelse, env)
                else:
                    yield NORMAL, env
        else:
            raise TypeError(s)

    def guard(self, state: Env) -> bool:
        return bool(self._eval(self.prog.guard, dict(zip(self.vars, state))))

    def assertion(self, state: Env) -> bool:
        fa = self.prog.final_assert
        return fa is None or bool(self._eval(fa, dict(zip(self.vars, state))))

    def iterate(self, state: Env) -> list[tuple[str, Env]]:
        """All outcomes of one body execution from a guard state."""
        env = dict(zip(self.vars, state))
        return [(out, tuple(e[v] for v in self.vars)) for out, e in self._exec(self.prog.body, env)]

    def traces(self, max_steps: int) -> set[tuple[tuple[Env, ...], bool]]:
        """Terminating traces with at most ``max_steps`` iterations.

        Each trace is the sequence of loop-head states followed by the
        state in which the program stops, paired with whether the final
        assertion holds there.
        """
        out = set()
        stack = [((s,), True) for s in dict.fromkeys(self.initial())]
        while stack:
            path, _ = stack.pop()
            last = path[-1]
            if not self.guard(last):
                out.add((path, self.assertion(last)))
                continue
            if len(path) > max_steps:
                continue
            for kind, nxt in dict.fromkeys(self.iterate(last)):
                if kind == NORMAL:
                    stack.append((path + (nxt,), True))
                elif kind == BREAK:
                    out.add((path + (nxt,), self.assertion(nxt)))
                else:
                    out.add((path + (nxt,), False))
        return out

    def find_failure(self, depth: int | None = None) -> tuple[Env, ...] | None:
        """Breadth-first search for a run that ends with a failed assertion."""
        if depth is None:
            depth = 1 << (len(self.vars) * self.width)
        parent: dict[Env, Env | None] = {}
        queue = deque()
        for s in self.initial():
            if s not in parent:
                parent[s] = None
                queue.append((s, 0))

        def path_to(s, tail=()):
            seq = [s]
            while parent[seq[-1]] is not None:
                seq.append(parent[seq[-1]])
            return tuple(reversed(seq)) + tail

        while queue:
            s, k = queue.popleft()
            if not self.guard(s):
                if not self.assertion(s):
                    return path_to(s)
                continue
            if k >= depth:
                continue
            for kind, nxt in self.iterate(s):
                if kind == ERROR or (kind == BREAK and not self.assertion(nxt)):
                    return path_to(s, (nxt,))
                if kind == NORMAL and nxt not in parent:
                    parent[nxt] = s
                    queue.append((nxt, k + 1))
        return None


def loop_traces(L, max_steps: int) -> set[tuple[tuple[tuple[int, ...], ...], bool]]:
    """The same trace set computed on a desugared loop, projected to source vars."""
    from . import semantics as sem
    idx = [L.index(v) for v in L.source_vars]

    def proj(s):
        return tuple(s[i] for i in idx)

    out = set()
    stack = [(s,) for s in sem.initial_states(L)]
    while stack:
        path = stack.pop()
        last = path[-1]
        if not sem.holds_guard(L, last):
            out.add((tuple(proj(s) for s in path), sem.holds_assert(L, last)))
            continue
        if len(path) > max_steps:
            continue
        for nxt in dict.fromkeys(s2 for _, s2 in sem.successors(L, last)):
            stack.append(path + (nxt,))
    return out


def all_values(width: int) -> list[int]:
    half = 1 << (width - 1)
    return [u - (1 << width) if u >= half else u for u in range(1 << width)]


__all__ = ["Interpreter", "loop_traces", "all_values", "NORMAL", "BREAK", "ERROR"]
