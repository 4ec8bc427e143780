"""Canonical single-loop transition systems and the desugarer.

A :class:`LoopSystem` is ``assume(I); while (G) T; assert(A)`` where ``T``
is one vector of simultaneous updates over the state variables and the
nondeterminism sites of the body.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

from . import expr as E
from .errors import UnsupportedFeature, WidthError
from .expr import Expr
from .syntax import (NONDET, Assert, Assign, Block, Break, If, SourceProgram, Stmt,
                     map_program_literals)

MAX_WIDTH = 32


@dataclass(frozen=True)
class NondetSite:
    name: str
    bits: int
    line: int = 0
    col: int = 0
    target: str | None = None  # variable written by a ``v = *`` site

    @property
    def is_choice(self) -> bool:
        return self.bits == 1

    def domain(self, width: int) -> list[int]:
        """Site values in enumeration order (unsigned ascending, as signed)."""
        if self.bits == 1:
            return [0, 1]
        half = 1 << (width - 1)
        return [u - (1 << width) if u >= half else u for u in range(1 << width)]


@dataclass(frozen=True)
class LoopSystem:
    vars: tuple[str, ...]
    width: int
    init: Expr
    guard: Expr
    updates: tuple[Expr, ...]
    assertion: Expr
    sites: tuple[NondetSite, ...] = ()
    source_vars: tuple[str, ...] = ()
    break_var: str | None = None
    error_var: str | None = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if not 1 <= self.width <= MAX_WIDTH:
            raise ValueError(f"width must lie in 1..{MAX_WIDTH}")
        if len(self.updates) != len(self.vars):
            raise ValueError("one update per variable required")
        known = set(self.vars)
        site_names = {s.name for s in self.sites}
        for e in (self.init, self.guard, self.assertion, *self.updates):
            bad = E.free_vars(e) - known
            if bad:
                raise ValueError(f"undeclared variables {sorted(bad)}")
        for e in (self.init, self.guard, self.assertion):
            if E.nondet_symbols(e):
                raise ValueError("init, guard and assertion must be nondet-free")
        for u in self.updates:
            if E.nondet_symbols(u) - site_names:
                raise ValueError("update mentions an unregistered nondet symbol")
        if not self.source_vars:
            object.__setattr__(self, "source_vars", self.vars)

    @property
    def nvars(self) -> int:
        return len(self.vars)

    @property
    def state_count(self) -> int:
        return 1 << (self.nvars * self.width)

    def index(self, name: str) -> int:
        return self.vars.index(name)

    def site(self, name: str) -> NondetSite:
        for s in self.sites:
            if s.name == name:
                return s
        raise KeyError(name)

    @cached_property
    def driven_vars(self) -> tuple[str, ...]:
        """Variables whose update depends on some nondeterministic choice."""
        return tuple(v for v, u in zip(self.vars, self.updates) if E.nondet_symbols(u))

    def describe(self) -> str:
        lines = [f"vars: {', '.join(self.vars)} (width {self.width})",
                 f"init: {self.init}", f"guard: {self.guard}"]
        for v, u in zip(self.vars, self.updates):
            lines.append(f"  {v}' = {u}")
        lines.append(f"assert: {self.assertion}")
        for s in self.sites:
            lines.append(f"site {s.name}: {s.bits} bit(s) at {s.line}:{s.col}")
        return "\n".join(lines)


# -------------------------------------------------------------- desugaring

def apply_subst(prog: SourceProgram, subst: Mapping[int, int] | None) -> SourceProgram:
    """Rewrite literals, e.g. ``{1000000: 16}`` to scale a deep-bug bound."""
    if not subst:
        return prog
    table = dict(subst)

    def fn(v: int) -> int:
        if v in table:
            return table[v]
        if -v in table:
            return -table[-v]
        return v

    return map_program_literals(prog, fn)


def _check_literals(prog: SourceProgram, width: int) -> None:
    lo, hi = -(1 << (width - 1)), (1 << (width - 1)) - 1
    exprs = []
    for d in prog.decls:
        if isinstance(d.init, Expr):
            exprs.append(d.init)
    exprs += [e for e in (prog.assume, prog.guard, prog.final_assert) if e is not None]

    def walk(s: Stmt):
        if isinstance(s, Assign) and isinstance(s.value, Expr):
            exprs.append(s.value)
        elif isinstance(s, If):
            if isinstance(s.cond, Expr):
                exprs.append(s.cond)
            walk(s.then)
            if s.orelse is not None:
                walk(s.orelse)
        elif isinstance(s, Assert):
            exprs.append(s.cond)
        elif isinstance(s, Block):
            for x in s.stmts:
                walk(x)

    walk(prog.body)
    for e in exprs:
        for v in E.literals(e):
            if not lo <= v <= hi:
                raise WidthError(
                    f"literal {v} does not fit in {width}-bit signed range [{lo}, {hi}]; "
                    f"scale it with --subst {abs(v)}=<value>")


def _fresh(base: str, taken: set[str]) -> str:
    name, k = base, 1
    while name in taken:
        name = f"{base}{k}"
        k += 1
    taken.add(name)
    return name


def _contains(s: Stmt, kind) -> bool:
    if isinstance(s, kind):
        return True
    if isinstance(s, If):
        return _contains(s.then, kind) or (s.orelse is not None and _contains(s.orelse, kind))
    if isinstance(s, Block):
        return any(_contains(x, kind) for x in s.stmts)
    return False


class _BodyCompiler:
    """Symbolic execution of one loop iteration into simultaneous updates.

    After a ``break`` or a failed in-loop ``assert`` the rest of the
    iteration is suppressed, so every later assignment is guarded by the
    ``active`` condition.
    """

    def __init__(self, taken: set[str], width: int):
        self.taken = taken
        self.width = width
        self.sites: list[NondetSite] = []

    def new_site(self, bits: int, span, target=None) -> Expr:
        name = _fresh(f"n{len(self.sites) + 1}", self.taken)
        self.sites.append(NondetSite(name, bits, span[0], span[1], target))
        return E.nondet(name, E.BOOL if bits == 1 else E.INT)

    @staticmethod
    def active(env) -> Expr:
        return E.s_and(E.s_not(env["#brk"]), E.s_not(env["#err"]))

    def run(self, s: Stmt, env: dict[str, Expr]) -> dict[str, Expr]:
        if isinstance(s, Block):
            for x in s.stmts:
                env = self.run(x, env)
            return env
        if isinstance(s, Assign):
            if s.value is NONDET:
                rhs = self.new_site(self.width, s.span, target=s.name)
            else:
                rhs = E.substitute(s.value, env)
            out = dict(env)
            out[s.name] = E.s_ite(self.active(env), rhs, env[s.name])
            return out
        if isinstance(s, Break):
            out = dict(env)
            out["#brk"] = E.s_or(env["#brk"], self.active(env))
            return out
        if isinstance(s, Assert):
            out = dict(env)
            failed = E.s_and(self.active(env), E.s_not(E.substitute(s.cond, env)))
            out["#err"] = E.s_or(env["#err"], failed)
            return out
        if isinstance(s, If):
            if s.cond is NONDET:
                cond = self.new_site(1, s.span)
            else:
                cond = E.substitute(s.cond, env)
            then_env = self.run(s.then, dict(env))
            else_env = self.run(s.orelse, dict(env)) if s.orelse is not None else env
            return {k: E.s_ite(cond, then_env[k], else_env[k]) for k in env}
        raise TypeError(s)


def desugar(prog: SourceProgram, width: int = 8, subst: Mapping[int, int] | None = None,
            name: str = "") -> LoopSystem:
    """Compile a parsed program into a :class:`LoopSystem`.

    ``break`` is modelled by a fresh 0/1 variable conjoined negatively to
    the guard; in-loop assertions by a fresh error latch that also forces
    the final assertion to fail.
    """
    if not 1 <= width <= MAX_WIDTH:
        raise UnsupportedFeature(f"width must lie in 1..{MAX_WIDTH}")
    prog = apply_subst(prog, subst)
    _check_literals(prog, width)
    src_vars = prog.variables
    if not src_vars:
        raise UnsupportedFeature("the program declares no variables")
    taken = set(src_vars)
    brk = _fresh("brk", taken) if _contains(prog.body, Break) else None
    err = _fresh("err", taken) if _contains(prog.body, Assert) else None
    all_vars = src_vars + tuple(v for v in (brk, err) if v)

    init_parts = []
    for d in prog.decls:
        if isinstance(d.init, Expr):
            init_parts.append(E.compare("eq", E.var(d.name), d.init))
    if prog.assume is not None:
        init_parts.append(prog.assume)
    for flag in (brk, err):
        if flag:
            init_parts.append(E.compare("eq", E.var(flag), E.const(0)))
    init = E.s_and(*init_parts)

    env: dict[str, Expr] = {v: E.var(v) for v in src_vars}
    env["#brk"] = E.FALSE
    env["#err"] = E.FALSE
    comp = _BodyCompiler(taken, width)
    out = comp.run(prog.body, env)

    updates = [out[v] for v in src_vars]
    for flag, key in ((brk, "#brk"), (err, "#err")):
        if flag:
            updates.append(E.s_ite(out[key], E.const(1), E.const(0)))

    guard = prog.guard
    extra = [E.compare("eq", E.var(f), E.const(0)) for f in (brk, err) if f]
    if extra:
        guard = E.s_and(guard, *extra)
    assertion = prog.final_assert if prog.final_assert is not None else E.TRUE
    if err:
        assertion = E.s_and(E.compare("eq", E.var(err), E.const(0)), assertion)

    return LoopSystem(
        vars=all_vars, width=width, init=init, guard=guard, updates=tuple(updates),
        assertion=assertion, sites=tuple(comp.sites), source_vars=src_vars,
        break_var=brk, error_var=err, name=name)


def load(text: str, width: int = 8, subst: Mapping[int, int] | None = None,
         name: str = "") -> LoopSystem:
    from .syntax import parse
    return desugar(parse(text), width, subst, name)
