"""Typed expression trees over fixed-width integers and booleans.

One node type serves program guards and updates as well as certificate
components (predicates, ranking functions, Skolem functions).  Integer
arithmetic wraps at the configured width unless evaluated with
``wrap=False`` (used for ranking functions).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Iterable, Mapping

import numpy as np

from .errors import SortError, UnboundSymbol

BOOL = "bool"
INT = "int"

ARITH = {"add": "+", "sub": "-", "mul": "*"}
COMPARE = {"eq": "==", "ne": "!=", "lt": "<", "le": "<=", "gt": ">", "ge": ">="}
MIRROR = {"lt": "gt", "le": "ge", "gt": "lt", "ge": "le", "eq": "eq", "ne": "ne"}
NEGATE = {"lt": "ge", "le": "gt", "gt": "le", "ge": "lt", "eq": "ne", "ne": "eq"}

_BOOL_OPS = {"bool", "ndb", "not", "and", "or", *COMPARE}
_INT_OPS = {"const", "var", "ndi", "neg", *ARITH}

PREC = {
    "ite": 1, "or": 2, "and": 3, "eq": 4, "ne": 4,
    "lt": 5, "le": 5, "gt": 5, "ge": 5, "add": 6, "sub": 6, "mul": 7,
    "not": 8, "neg": 8,
}


@dataclass(frozen=True)
class Expr:
    op: str
    args: tuple["Expr", ...] = ()
    value: Any = None

    @property
    def sort(self) -> str:
        if self.op in _BOOL_OPS:
            return BOOL
        if self.op in _INT_OPS:
            return INT
        if self.op == "ite":
            return self.args[1].sort
        if self.op == "table":
            return self.value[2]
        raise ValueError(f"unknown node kind {self.op!r}")

    def size(self) -> int:
        if self.op == "table":
            return 1 + len(self.args) + len(self.value[0])
        return 1 + sum(a.size() for a in self.args)

    def __str__(self) -> str:
        return to_source(self)


TRUE = Expr("bool", (), True)
FALSE = Expr("bool", (), False)


def _need(e: Expr, sort: str, where: str) -> None:
    if e.sort != sort:
        raise SortError(f"{where} expects {sort} operand, got {e.sort}: {to_source(e)}")


def const(v: int) -> Expr:
    return Expr("const", (), int(v))


def boolean(b: bool) -> Expr:
    return TRUE if b else FALSE


def var(name: str) -> Expr:
    return Expr("var", (), name)


def nondet(name: str, sort: str) -> Expr:
    return Expr("ndb" if sort == BOOL else "ndi", (), name)


def arith(op: str, a: Expr, b: Expr) -> Expr:
    _need(a, INT, op)
    _need(b, INT, op)
    return Expr(op, (a, b))


def add(a: Expr, b: Expr) -> Expr:
    return arith("add", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    return arith("sub", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    return arith("mul", a, b)


def neg(a: Expr) -> Expr:
    _need(a, INT, "unary -")
    if a.op == "const":
        return const(-a.value)
    return Expr("neg", (a,))


def compare(op: str, a: Expr, b: Expr) -> Expr:
    _need(a, INT, COMPARE[op])
    _need(b, INT, COMPARE[op])
    return Expr(op, (a, b))


def and_(*args: Expr) -> Expr:
    for a in args:
        _need(a, BOOL, "&&")
    if len(args) == 1:
        return args[0]
    return Expr("and", tuple(args))


def or_(*args: Expr) -> Expr:
    for a in args:
        _need(a, BOOL, "||")
    if len(args) == 1:
        return args[0]
    return Expr("or", tuple(args))


def not_(a: Expr) -> Expr:
    _need(a, BOOL, "!")
    return Expr("not", (a,))


def ite(c: Expr, a: Expr, b: Expr) -> Expr:
    _need(c, BOOL, "?:")
    if a.sort != b.sort:
        raise SortError(f"?: branches differ in sort: {to_source(a)} / {to_source(b)}")
    return Expr("ite", (c, a, b))


def table(keys: Iterable[str], entries: Iterable[tuple[tuple[int, ...], int]],
          default: int, sort: str) -> Expr:
    """Explicit lookup table from key-variable valuations to values."""
    keys = tuple(var(k) for k in keys)
    rows = tuple(sorted((tuple(int(x) for x in k), int(v)) for k, v in entries))
    for k, _ in rows:
        if len(k) != len(keys):
            raise SortError("table row arity does not match its key variables")
    return Expr("table", keys, (rows, int(default), sort))


# Simplifying constructors, used when the desugarer and the dualizers build
# expressions mechanically.  The parser never uses them so that parsed
# trees mirror the source text.

def s_not(a: Expr) -> Expr:
    if a.op == "bool":
        return boolean(not a.value)
    if a.op == "not":
        return a.args[0]
    return not_(a)


def s_and(*args: Expr) -> Expr:
    out: list[Expr] = []
    for a in args:
        if a == FALSE:
            return FALSE
        if a == TRUE:
            continue
        out.extend(a.args if a.op == "and" else (a,))
    if not out:
        return TRUE
    return and_(*out)


def s_or(*args: Expr) -> Expr:
    out: list[Expr] = []
    for a in args:
        if a == TRUE:
            return TRUE
        if a == FALSE:
            continue
        out.extend(a.args if a.op == "or" else (a,))
    if not out:
        return FALSE
    return or_(*out)


def s_ite(c: Expr, a: Expr, b: Expr) -> Expr:
    if c == TRUE or a == b:
        return a
    if c == FALSE:
        return b
    if a.sort == BOOL:
        if a == TRUE and b == FALSE:
            return c
        if a == FALSE and b == TRUE:
            return s_not(c)
    return ite(c, a, b)


def conjuncts(e: Expr) -> tuple[Expr, ...]:
    if e.op == "and":
        return e.args
    if e == TRUE:
        return ()
    return (e,)


def free_vars(e: Expr) -> set[str]:
    out: set[str] = set()
    stack = [e]
    while stack:
        n = stack.pop()
        if n.op == "var":
            out.add(n.value)
        stack.extend(n.args)
    return out


def nondet_symbols(e: Expr) -> set[str]:
    out: set[str] = set()
    stack = [e]
    while stack:
        n = stack.pop()
        if n.op in ("ndb", "ndi"):
            out.add(n.value)
        stack.extend(n.args)
    return out


def literals(e: Expr) -> set[int]:
    out: set[int] = set()
    stack = [e]
    while stack:
        n = stack.pop()
        if n.op == "const":
            out.add(n.value)
        stack.extend(n.args)
    return out


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace variables by expressions (simultaneously)."""
    if e.op == "var":
        return mapping.get(e.value, e)
    if e.op == "table":
        if any(k.value in mapping and mapping[k.value] != k for k in e.args):
            raise ValueError("cannot substitute into a table key")
        return e
    if not e.args:
        return e
    return Expr(e.op, tuple(substitute(a, mapping) for a in e.args), e.value)


def map_literals(e: Expr, fn: Callable[[int], int]) -> Expr:
    if e.op == "const":
        return const(fn(e.value))
    if not e.args or e.op == "table":
        return e
    return Expr(e.op, tuple(map_literals(a, fn) for a in e.args), e.value)


# ---------------------------------------------------------------- printing

def to_source(e: Expr, prec: int = 0) -> str:
    op = e.op
    if op == "const":
        return str(e.value)
    if op == "bool":
        return "true" if e.value else "false"
    if op in ("var", "ndb", "ndi"):
        return e.value
    if op == "table":
        rows, default, sort = e.value
        keys = ", ".join(k.value for k in e.args)
        body = ", ".join("(" + ", ".join(map(str, k)) + f"): {v}" for k, v in rows)
        sep = ", " if body else ""
        return f"table {sort} ({keys}) {{{body}{sep}default: {default}}}"
    p = PREC[op]
    if op in ARITH:
        s = f"{to_source(e.args[0], p)} {ARITH[op]} {to_source(e.args[1], p + 1)}"
    elif op in COMPARE:
        s = f"{to_source(e.args[0], p + 1)} {COMPARE[op]} {to_source(e.args[1], p + 1)}"
    elif op in ("and", "or"):
        glue = " && " if op == "and" else " || "
        s = glue.join(to_source(a, p + 1) for a in e.args)
    elif op == "not":
        s = "!" + to_source(e.args[0], p)
    elif op == "neg":
        inner = to_source(e.args[0], p)
        s = "-" + (f"({inner})" if inner.startswith("-") else inner)
    elif op == "ite":
        c, a, b = e.args
        s = f"{to_source(c, p + 1)} ? {to_source(a, 0)} : {to_source(b, p)}"
    else:
        raise ValueError(f"unknown node kind {op!r}")
    return f"({s})" if p < prec else s


# -------------------------------------------------------------- evaluation

def wrap_int(v, width: int):
    """Two's-complement wrap of a Python int or an integer numpy array."""
    half = 1 << (width - 1)
    return ((v + half) & ((1 << width) - 1)) - half


def evaluate(e: Expr, env: Mapping[str, int], width: int, wrap: bool = True):
    """Direct recursive evaluation on one state (reference semantics)."""
    op = e.op
    if op == "const":
        return wrap_int(e.value, width) if wrap else e.value
    if op == "bool":
        return e.value
    if op in ("var", "ndi", "ndb"):
        try:
            v = env[e.value]
        except KeyError:
            raise UnboundSymbol(e.value) from None
        return v != 0 if op == "ndb" else v
    if op in ARITH:
        a = evaluate(e.args[0], env, width, wrap)
        b = evaluate(e.args[1], env, width, wrap)
        r = a + b if op == "add" else a - b if op == "sub" else a * b
        return wrap_int(r, width) if wrap else r
    if op == "neg":
        r = -evaluate(e.args[0], env, width, wrap)
        return wrap_int(r, width) if wrap else r
    if op in COMPARE:
        a = evaluate(e.args[0], env, width, wrap)
        b = evaluate(e.args[1], env, width, wrap)
        return {"eq": a == b, "ne": a != b, "lt": a < b, "le": a <= b,
                "gt": a > b, "ge": a >= b}[op]
    if op == "and":
        return all(evaluate(a, env, width, wrap) for a in e.args)
    if op == "or":
        return any(evaluate(a, env, width, wrap) for a in e.args)
    if op == "not":
        return not evaluate(e.args[0], env, width, wrap)
    if op == "ite":
        c = evaluate(e.args[0], env, width, wrap)
        return evaluate(e.args[1] if c else e.args[2], env, width, wrap)
    if op == "table":
        rows, default, sort = e.value
        key = tuple(evaluate(k, env, width, wrap) for k in e.args)
        v = dict(rows).get(key, default)
        return v != 0 if sort == BOOL else v
    raise ValueError(f"unknown node kind {op!r}")


_NP_CMP = {"eq": np.equal, "ne": np.not_equal, "lt": np.less, "le": np.less_equal,
           "gt": np.greater, "ge": np.greater_equal}


def compile_vec(e: Expr, width: int, wrap: bool = True) -> Callable[[Mapping[str, Any]], Any]:
    """Compile to a closure over columns (name -> int64 array).

    The closure may return a scalar when the expression is constant; use
    :func:`eval_columns` to always obtain a full-length array.
    """
    op = e.op
    if op == "const":
        v = np.int64(wrap_int(e.value, width) if wrap else e.value)
        return lambda cols: v
    if op == "bool":
        b = np.bool_(e.value)
        return lambda cols: b
    if op in ("var", "ndi"):
        name = e.value
        return lambda cols: cols[name]
    if op == "ndb":
        name = e.value
        return lambda cols: np.not_equal(cols[name], 0)
    kids = [compile_vec(a, width, wrap) for a in e.args]
    if op in ARITH:
        f, g = kids
        ufunc = {"add": np.add, "sub": np.subtract, "mul": np.multiply}[op]
        if wrap:
            half = np.int64(1 << (width - 1))
            mask = np.int64((1 << width) - 1)
            return lambda cols: ((ufunc(f(cols), g(cols)) + half) & mask) - half
        return lambda cols: ufunc(f(cols), g(cols))
    if op == "neg":
        (f,) = kids
        if wrap:
            half = np.int64(1 << (width - 1))
            mask = np.int64((1 << width) - 1)
            return lambda cols: ((np.negative(f(cols)) + half) & mask) - half
        return lambda cols: np.negative(f(cols))
    if op in COMPARE:
        f, g = kids
        ufunc = _NP_CMP[op]
        return lambda cols: ufunc(f(cols), g(cols))
    if op in ("and", "or"):
        ufunc = np.logical_and if op == "and" else np.logical_or

        def nary(cols):
            acc = kids[0](cols)
            for k in kids[1:]:
                acc = ufunc(acc, k(cols))
            return acc
        return nary
    if op == "not":
        (f,) = kids
        return lambda cols: np.logical_not(f(cols))
    if op == "ite":
        c, f, g = kids
        return lambda cols: np.where(c(cols), f(cols), g(cols))
    if op == "table":
        return _compile_table(e, width, wrap)
    raise ValueError(f"unknown node kind {op!r}")


def _compile_table(e: Expr, width: int, wrap: bool):
    rows, default, sort = e.value
    keys = [compile_vec(k, width, wrap) for k in e.args]
    mask = (1 << width) - 1

    def code(values):
        acc = np.int64(0)
        for v in values:
            acc = (acc << np.int64(width)) | (np.asarray(v, dtype=np.int64) & mask)
        return acc

    if rows:
        codes = np.array([int(code(k)) for k, _ in rows], dtype=np.int64)
        order = np.argsort(codes, kind="stable")
        codes = codes[order]
        vals = np.array([v for _, v in rows], dtype=np.int64)[order]
    else:
        codes = np.zeros(0, dtype=np.int64)
        vals = np.zeros(0, dtype=np.int64)

    def look(cols):
        c = code([k(cols) for k in keys])
        if len(codes) == 0:
            out = np.full(np.shape(c), default, dtype=np.int64)
        else:
            pos = np.clip(np.searchsorted(codes, c), 0, len(codes) - 1)
            out = np.where(codes[pos] == c, vals[pos], default)
        return out != 0 if sort == BOOL else out
    return look


def eval_columns(fn: Callable, cols: Mapping[str, Any], n: int) -> np.ndarray:
    """Call a compiled closure and broadcast the result to length ``n``."""
    r = fn(cols)
    if np.ndim(r) == 0:
        return np.full(n, r)
    return r


def compile_scalar(e: Expr, width: int, wrap: bool = True) -> Callable[[Mapping[str, int]], Any]:
    """Closure for repeated single-state evaluation (interpreters, BFS)."""
    op = e.op
    if op == "const":
        v = wrap_int(e.value, width) if wrap else e.value
        return lambda env: v
    if op == "bool":
        b = e.value
        return lambda env: b
    if op in ("var", "ndi"):
        name = e.value
        return lambda env: env[name]
    if op == "ndb":
        name = e.value
        return lambda env: env[name] != 0
    if op == "table":
        rows, default, sort = e.value
        lut = dict(rows)
        key_fns = [compile_scalar(k, width, wrap) for k in e.args]
        if sort == BOOL:
            return lambda env: lut.get(tuple(k(env) for k in key_fns), default) != 0
        return lambda env: lut.get(tuple(k(env) for k in key_fns), default)
    kids = [compile_scalar(a, width, wrap) for a in e.args]
    half = 1 << (width - 1)
    mask = (1 << width) - 1
    if op in ARITH:
        f, g = kids
        if op == "add":
            raw = lambda env: f(env) + g(env)
        elif op == "sub":
            raw = lambda env: f(env) - g(env)
        else:
            raw = lambda env: f(env) * g(env)
        if wrap:
            return lambda env: ((raw(env) + half) & mask) - half
        return raw
    if op == "neg":
        (f,) = kids
        if wrap:
            return lambda env: ((half - f(env)) & mask) - half
        return lambda env: -f(env)
    if op in COMPARE:
        f, g = kids
        return {
            "eq": lambda env: f(env) == g(env),
            "ne": lambda env: f(env) != g(env),
            "lt": lambda env: f(env) < g(env),
            "le": lambda env: f(env) <= g(env),
            "gt": lambda env: f(env) > g(env),
            "ge": lambda env: f(env) >= g(env),
        }[op]
    if op == "and":
        return lambda env: all(k(env) for k in kids)
    if op == "or":
        return lambda env: any(k(env) for k in kids)
    if op == "not":
        (f,) = kids
        return lambda env: not f(env)
    if op == "ite":
        c, f, g = kids
        return lambda env: f(env) if c(env) else g(env)
    raise ValueError(f"unknown node kind {op!r}")
