"""Concrete syntax of the loop language: tokens, AST, parser, printer.

The accepted language is a small C subset::

    int x = 0; int y = *;
    assume(y > 0);
    while (x < 10) { x++; if (*) y = y + 1; else break; }
    assert(x == y);

``*`` denotes a nondeterministic choice and may appear as an initializer,
as the right-hand side of an assignment, or as an ``if`` condition.
Expressions additionally support the ternary operator and explicit lookup
tables, which certificates use.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union

from . import expr as E
from .errors import ParseError, SortError, UnsupportedFeature
from .expr import Expr


class _Nondet:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "NONDET"

    def __reduce__(self):
        return (_Nondet, ())


NONDET = _Nondet()
Span = tuple[int, int]


@dataclass(frozen=True)
class Decl:
    name: str
    init: Union[Expr, _Nondet, None]
    span: Span = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Assign:
    name: str
    value: Union[Expr, _Nondet]
    span: Span = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class If:
    cond: Union[Expr, _Nondet]
    then: "Stmt"
    orelse: "Stmt | None" = None
    span: Span = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Break:
    span: Span = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Assert:
    cond: Expr
    span: Span = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Block:
    stmts: tuple["Stmt", ...]
    span: Span = field(default=(0, 0), compare=False)


Stmt = Union[Assign, If, Break, Assert, Block]


@dataclass(frozen=True)
class SourceProgram:
    decls: tuple[Decl, ...]
    assume: Expr | None
    guard: Expr
    body: Block
    final_assert: Expr | None
    span: Span = field(default=(1, 1), compare=False)

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.decls)


# ------------------------------------------------------------------ lexing

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*|/\*.*?\*/)
  | (?P<num>\d+)
  | (?P<id>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>==|!=|<=|>=|&&|\|\||\+\+|--|\+=|-=|\*=|[-+*/%<>!=(){};,?:\[\]&|^~])
""", re.VERBOSE | re.DOTALL)

KEYWORDS = {"int", "assume", "while", "if", "else", "break", "assert", "true", "false",
            "table", "bool", "default", "for", "do"}


@dataclass(frozen=True)
class Token:
    kind: str  # 'num', 'id', 'kw', 'op', 'eof'
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    toks: list[Token] = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        chunk = m.group()
        if kind == "id" and chunk in KEYWORDS:
            kind = "kw"
        if kind not in ("ws", "comment"):
            toks.append(Token(kind, chunk, line, col))
        nl = chunk.count("\n")
        if nl:
            line += nl
            col = len(chunk) - chunk.rfind("\n")
        else:
            col += len(chunk)
        pos = m.end()
    toks.append(Token("eof", "<end of input>", line, col))
    return toks


# ----------------------------------------------------------------- parsing

_BINARY_LEVELS = [
    ({"||"}, "or"),
    ({"&&"}, "and"),
    ({"==", "!="}, "eq"),
    ({"<", "<=", ">", ">="}, "rel"),
    ({"+", "-"}, "add"),
    ({"*"}, "mul"),
]
_OP_NAME = {"==": "eq", "!=": "ne", "<": "lt", "<=": "le", ">": "gt", ">=": "ge",
            "+": "add", "-": "sub", "*": "mul"}


class Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def at(self, *texts: str) -> bool:
        t = self.tok
        return t.kind in ("op", "kw") and t.text in texts

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail({text})
        return self.advance()

    def fail(self, expected: set[str], message: str | None = None):
        t = self.tok
        raise ParseError(message or f"unexpected {t.text!r}", t.line, t.col, frozenset(expected))

    def ident(self) -> Token:
        if self.tok.kind != "id":
            self.fail({"identifier"})
        return self.advance()

    # expressions
    def expression(self) -> Expr:
        t = self.tok
        try:
            return self._ternary()
        except SortError as exc:
            raise ParseError(str(exc), t.line, t.col) from None

    def _ternary(self) -> Expr:
        c = self._binary(0)
        if self.at("?"):
            self.advance()
            a = self._ternary()
            self.expect(":")
            b = self._ternary()
            return E.ite(c, a, b)
        return c

    def _binary(self, level: int) -> Expr:
        if level == len(_BINARY_LEVELS):
            return self._unary()
        ops, kind = _BINARY_LEVELS[level]
        left = self._binary(level + 1)
        if kind in ("or", "and"):
            parts = [left]
            while self.at(*ops):
                self.advance()
                parts.append(self._binary(level + 1))
            if len(parts) == 1:
                return left
            return E.or_(*parts) if kind == "or" else E.and_(*parts)
        if kind in ("eq", "rel"):
            if self.at(*ops):
                op = _OP_NAME[self.advance().text]
                right = self._binary(level + 1)
                left = E.compare(op, left, right)
                if self.at(*ops):
                    self.fail(set(), "chained comparison needs parentheses")
            return left
        while self.at(*ops):
            op = _OP_NAME[self.advance().text]
            right = self._binary(level + 1)
            left = E.arith(op, left, right)
        return left

    def _unary(self) -> Expr:
        if self.at("!"):
            self.advance()
            return E.not_(self._unary())
        if self.at("-"):
            self.advance()
            return E.neg(self._unary())
        return self._primary()

    def _primary(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return E.const(int(t.text))
        if t.kind == "kw" and t.text in ("true", "false"):
            self.advance()
            return E.boolean(t.text == "true")
        if t.kind == "kw" and t.text == "table":
            return self._table()
        if t.kind == "id":
            self.advance()
            if self.at("("):
                raise UnsupportedFeature(f"{t.line}:{t.col}: function calls are not supported")
            if self.at("["):
                raise UnsupportedFeature(f"{t.line}:{t.col}: arrays are not supported")
            return E.var(t.text)
        if self.at("("):
            self.advance()
            e = self._ternary()
            self.expect(")")
            return e
        self.fail({"(", "identifier", "integer", "true", "false", "!", "-"})

    def _signed_int(self) -> int:
        sign = 1
        if self.at("-"):
            self.advance()
            sign = -1
        if self.tok.kind != "num":
            self.fail({"integer"})
        return sign * int(self.advance().text)

    def _table(self) -> Expr:
        self.expect("table")
        if not self.at("bool", "int"):
            self.fail({"bool", "int"})
        sort = E.BOOL if self.advance().text == "bool" else E.INT
        self.expect("(")
        keys = [self.ident().text]
        while self.at(","):
            self.advance()
            keys.append(self.ident().text)
        self.expect(")")
        self.expect("{")
        rows = []
        while self.at("("):
            self.advance()
            k = [self._signed_int()]
            while self.at(","):
                self.advance()
                k.append(self._signed_int())
            self.expect(")")
            self.expect(":")
            rows.append((tuple(k), self._signed_int()))
            self.expect(",")
        self.expect("default")
        self.expect(":")
        default = self._signed_int()
        self.expect("}")
        try:
            return E.table(keys, rows, default, sort)
        except SortError as exc:
            raise ParseError(str(exc), self.tok.line, self.tok.col) from None

    def bool_expression(self) -> Expr:
        t = self.tok
        e = self.expression()
        if e.sort != E.BOOL:
            raise ParseError("condition must be boolean", t.line, t.col)
        return e

    def int_expression(self) -> Expr:
        t = self.tok
        e = self.expression()
        if e.sort != E.INT:
            raise ParseError("integer expression expected", t.line, t.col)
        return e

    # statements
    def program(self) -> SourceProgram:
        decls: list[Decl] = []
        while self.at("int"):
            self.advance()
            while True:
                name = self.ident()
                init: Expr | _Nondet | None = None
                if self.at("="):
                    self.advance()
                    init = self._rhs()
                decls.append(Decl(name.text, init, (name.line, name.col)))
                if not self.at(","):
                    break
                self.advance()
            self.expect(";")
        assume = None
        if self.at("assume"):
            self.advance()
            self.expect("(")
            assume = self.bool_expression()
            self.expect(")")
            self.expect(";")
        if not self.at("while"):
            self.fail({"int", "assume", "while"} if not decls and assume is None
                      else ({"assume", "while"} if assume is None else {"while"}))
        w = self.advance()
        self.expect("(")
        guard = self.bool_expression()
        self.expect(")")
        body = self.statement(top=True)
        if not isinstance(body, Block):
            body = Block((body,), body.span)
        final = None
        if self.at("assert"):
            self.advance()
            self.expect("(")
            final = self.bool_expression()
            self.expect(")")
            self.expect(";")
        if self.at("while"):
            raise UnsupportedFeature(f"{self.tok.line}:{self.tok.col}: only one loop is supported")
        if self.tok.kind != "eof":
            self.fail({"assert", "<end of input>"})
        prog = SourceProgram(tuple(decls), assume, guard, body, final, (w.line, w.col))
        check_scoping(prog)
        return prog

    def _rhs(self) -> Expr | _Nondet:
        if self.at("*"):
            self.advance()
            return NONDET
        return self.int_expression()

    def statement(self, top: bool = False) -> Stmt:
        t = self.tok
        span = (t.line, t.col)
        if self.at("{"):
            self.advance()
            stmts = []
            while not self.at("}"):
                if self.tok.kind == "eof":
                    self.fail({"}"})
                s = self.statement()
                if s is not None:
                    stmts.append(s)
            self.advance()
            return Block(tuple(stmts), span)
        if self.at("while", "for", "do"):
            raise UnsupportedFeature(f"{t.line}:{t.col}: nested loops are not supported")
        if self.at("if"):
            self.advance()
            self.expect("(")
            if self.at("*"):
                self.advance()
                cond: Expr | _Nondet = NONDET
            else:
                cond = self.bool_expression()
            self.expect(")")
            then = self._nonempty_statement()
            orelse = None
            if self.at("else"):
                self.advance()
                orelse = self._nonempty_statement()
            return If(cond, then, orelse, span)
        if self.at("break"):
            self.advance()
            self.expect(";")
            return Break(span)
        if self.at("assert"):
            self.advance()
            self.expect("(")
            c = self.bool_expression()
            self.expect(")")
            self.expect(";")
            return Assert(c, span)
        if self.at(";"):
            self.advance()
            return Block((), span)
        if t.kind == "id":
            name = self.advance().text
            if self.at("["):
                raise UnsupportedFeature(f"{t.line}:{t.col}: arrays are not supported")
            if self.at("("):
                raise UnsupportedFeature(f"{t.line}:{t.col}: function calls are not supported")
            v = E.var(name)
            if self.at("++", "--"):
                op = "add" if self.advance().text == "++" else "sub"
                self.expect(";")
                return Assign(name, E.arith(op, v, E.const(1)), span)
            if self.at("+=", "-=", "*="):
                op = {"+=": "add", "-=": "sub", "*=": "mul"}[self.advance().text]
                rhs = self.int_expression()
                self.expect(";")
                return Assign(name, E.arith(op, v, rhs), span)
            self.expect("=")
            rhs = self._rhs()
            self.expect(";")
            return Assign(name, rhs, span)
        if t.kind == "kw" and t.text == "int":
            raise UnsupportedFeature(f"{t.line}:{t.col}: declarations inside the loop are not supported")
        self.fail({"identifier", "if", "break", "assert", "{", ";"}, f"unexpected {t.text!r}")

    def _nonempty_statement(self) -> Stmt:
        return self.statement()


def check_scoping(prog: SourceProgram) -> None:
    """Every variable is declared once, before any use."""
    seen: list[str] = []
    for d in prog.decls:
        if d.name in seen:
            raise ParseError(f"variable {d.name!r} declared twice", *d.span)
        if isinstance(d.init, Expr):
            for v in E.free_vars(d.init):
                if v not in seen:
                    raise ParseError(f"initializer of {d.name!r} uses undeclared {v!r}", *d.span)
        seen.append(d.name)
    declared = set(seen)

    def need(e, span):
        if isinstance(e, Expr):
            for v in E.free_vars(e):
                if v not in declared:
                    raise ParseError(f"undeclared variable {v!r}", *span)

    need(prog.assume, prog.span)
    need(prog.guard, prog.span)
    need(prog.final_assert, prog.span)

    def walk(s: Stmt):
        if isinstance(s, Assign):
            if s.name not in declared:
                raise ParseError(f"assignment to undeclared variable {s.name!r}", *s.span)
            need(s.value, s.span)
        elif isinstance(s, If):
            need(s.cond, s.span)
            walk(s.then)
            if s.orelse is not None:
                walk(s.orelse)
        elif isinstance(s, Assert):
            need(s.cond, s.span)
        elif isinstance(s, Block):
            for x in s.stmts:
                walk(x)

    walk(prog.body)


def parse(text: str) -> SourceProgram:
    return Parser(text).program()


def parse_expr(text: str) -> Expr:
    p = Parser(text)
    e = p.expression()
    if p.tok.kind != "eof":
        p.fail({"<end of input>"})
    return e


# ---------------------------------------------------------------- printing

def _rhs_src(v) -> str:
    return "*" if v is NONDET else E.to_source(v)


def _stmt_lines(s: Stmt, indent: int) -> list[str]:
    pad = "  " * indent
    if isinstance(s, Assign):
        return [f"{pad}{s.name} = {_rhs_src(s.value)};"]
    if isinstance(s, Break):
        return [f"{pad}break;"]
    if isinstance(s, Assert):
        return [f"{pad}assert({E.to_source(s.cond)});"]
    if isinstance(s, Block):
        return [f"{pad}{{"] + [ln for x in s.stmts for ln in _stmt_lines(x, indent + 1)] + [f"{pad}}}"]
    if isinstance(s, If):
        cond = "*" if s.cond is NONDET else E.to_source(s.cond)
        out = [f"{pad}if ({cond})"] + _stmt_lines(s.then, indent + 1)
        if s.orelse is not None:
            out += [f"{pad}else"] + _stmt_lines(s.orelse, indent + 1)
        return out
    raise TypeError(s)


def pretty(prog: SourceProgram) -> str:
    lines = []
    for d in prog.decls:
        if d.init is None:
            lines.append(f"int {d.name};")
        else:
            lines.append(f"int {d.name} = {_rhs_src(d.init)};")
    if prog.assume is not None:
        lines.append(f"assume({E.to_source(prog.assume)});")
    lines.append(f"while ({E.to_source(prog.guard)})")
    lines += _stmt_lines(prog.body, 0)
    if prog.final_assert is not None:
        lines.append(f"assert({E.to_source(prog.final_assert)});")
    return "\n".join(lines) + "\n"


def map_program_literals(prog: SourceProgram, fn) -> SourceProgram:
    """Rewrite every integer literal of the program through ``fn``."""

    def ex(e):
        return E.map_literals(e, fn) if isinstance(e, Expr) else e

    def st(s: Stmt) -> Stmt:
        if isinstance(s, Assign):
            return Assign(s.name, ex(s.value), s.span)
        if isinstance(s, If):
            return If(ex(s.cond), st(s.then), None if s.orelse is None else st(s.orelse), s.span)
        if isinstance(s, Assert):
            return Assert(ex(s.cond), s.span)
        if isinstance(s, Block):
            return Block(tuple(st(x) for x in s.stmts), s.span)
        return s

    return SourceProgram(
        tuple(Decl(d.name, ex(d.init), d.span) for d in prog.decls),
        ex(prog.assume), ex(prog.guard), st(prog.body), ex(prog.final_assert), prog.span)
