"""Danger and safety certificates: exhaustive checking and trace extraction.

A danger certificate ``(D, R, N, x0)`` is valid when

* ``x0`` is initial and satisfies ``D``;
* every ``D`` state inside the loop has ``R > 0`` and its successor chosen
  by the Skolem map ``N`` is again a ``D`` state with a smaller ``R``;
* every ``D`` state outside the loop violates the assertion.

Ranking functions are evaluated without wrap-around so that expressions
such as ``16 - x`` stay monotone.  Checks enumerate the whole finite state
space and report the first violation in the global state order.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import expr as E
from . import semantics as sem
from .errors import CertificateFormatError, CertificateInvalid, SortError
from .expr import Expr
from .loop import LoopSystem
from .semantics import State, Trace, TraceStatus

CRITERIA = ("base", "inductive", "rank-positive", "rank-decrease", "exit")
SAFETY_MODES = ("safety", "doomed-head", "doomed-state", "partial-danger")


@dataclass(frozen=True, eq=True)
class DangerCertificate:
    D: Expr
    R: Expr
    skolem: Mapping[str, Expr]
    x0: State

    __hash__ = None  # the Skolem map is a dict

    def __post_init__(self):
        if self.D.sort != E.BOOL:
            raise SortError("D must be boolean")
        if self.R.sort != E.INT:
            raise SortError("R must be integer-valued")
        for e in (self.D, self.R, *self.skolem.values()):
            if E.nondet_symbols(e):
                raise SortError(f"certificate component mentions a nondet symbol: {e}")
        object.__setattr__(self, "x0", tuple(int(v) for v in self.x0))
        object.__setattr__(self, "skolem", dict(sorted(self.skolem.items())))

    def size(self) -> int:
        return self.D.size() + self.R.size() + sum(e.size() for e in self.skolem.values())


@dataclass(frozen=True)
class SafetyCertificate:
    S: Expr
    mode: str = "safety"
    x0: State | None = None

    def __post_init__(self):
        if self.S.sort != E.BOOL:
            raise SortError("S must be boolean")
        if E.nondet_symbols(self.S):
            raise SortError("S must be nondet-free")
        if self.mode not in SAFETY_MODES:
            raise ValueError(f"unknown check mode {self.mode!r}")
        if self.x0 is not None:
            object.__setattr__(self, "x0", tuple(int(v) for v in self.x0))


@dataclass(frozen=True)
class Verdict:
    ok: bool
    criterion: str | None = None
    witness: tuple | None = None  # a State, or (state, successor)

    @classmethod
    def okay(cls) -> "Verdict":
        return cls(True)

    @classmethod
    def violation(cls, criterion: str, witness) -> "Verdict":
        assert criterion in CRITERIA
        return cls(False, criterion, witness)

    def __bool__(self) -> bool:
        return self.ok

    def witness_states(self) -> tuple[State, ...]:
        if self.witness is None:
            return ()
        if self.witness and isinstance(self.witness[0], tuple):
            return tuple(self.witness)
        return (self.witness,)

    def describe(self, L: LoopSystem | None = None) -> str:
        if self.ok:
            return "ok"
        states = self.witness_states()
        if L is not None:
            shown = " -> ".join("(" + sem.format_state(L, s) + ")" for s in states)
        else:
            shown = " -> ".join(map(str, states))
        return f"violation of {self.criterion} at {shown}"


# ---------------------------------------------------------------- checking

def _first(mask: np.ndarray):
    hits = np.flatnonzero(mask)
    return int(hits[0]) if len(hits) else None


def _run_chunks(L: LoopSystem, fn, jobs: int, budget: int, chunk: int):
    """Apply ``fn(lo, hi)`` to chunks in order; first non-None result wins.

    With several jobs the chunks are processed in batches, and the earliest
    chunk of a batch that reports something is returned, so the result is
    identical to the sequential scan.
    """
    ranges = sem.chunk_ranges(L, chunk, budget)
    if jobs <= 1 or len(ranges) == 1:
        for lo, hi in ranges:
            r = fn(lo, hi)
            if r is not None:
                return r
        return None
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        for k in range(0, len(ranges), jobs):
            batch = ranges[k:k + jobs]
            for r in pool.map(lambda rg: fn(*rg), batch):
                if r is not None:
                    return r
    return None


def _state_tuple(L: LoopSystem, cols: Mapping[str, np.ndarray], i: int) -> State:
    return tuple(int(cols[v][i]) for v in L.vars)


def check_danger(L: LoopSystem, c: DangerCertificate, jobs: int = 1,
                 budget: int = sem.DEFAULT_BUDGET, chunk: int = sem.DEFAULT_CHUNK) -> Verdict:
    """Validate a danger certificate over the whole state space."""
    sem._check_budget(L, budget)
    w = L.width
    if len(c.x0) != L.nvars or not sem.holds_init(L, c.x0) or \
            not E.evaluate(c.D, sem.env_of(L, c.x0), w):
        return Verdict.violation("base", c.x0)
    comp = sem.compiled(L)
    d_fn = E.compile_vec(c.D, w)
    r_fn = E.compile_vec(c.R, w, wrap=False)
    plan = sem.SkolemPlan(L, c.skolem)

    def scan(lo: int, hi: int):
        n = hi - lo
        cols = sem.columns(L, lo, hi)
        d = E.eval_columns(d_fn, cols, n).astype(bool)
        g = E.eval_columns(comp.v_guard, cols, n).astype(bool)
        a = E.eval_columns(comp.v_assert, cols, n).astype(bool)
        bad_exit = d & ~g & a
        inside = np.flatnonzero(d & g)
        best = None
        if len(inside):
            sub = {v: cols[v][inside] for v in L.vars}
            m = len(inside)
            r = E.eval_columns(r_fn, sub, m).astype(np.int64)
            nd, feasible = plan.resolve_vec(sub, m)
            nxt = sem.step_columns(L, sub, nd, m)
            d2 = E.eval_columns(d_fn, nxt, m).astype(bool)
            r2 = E.eval_columns(r_fn, nxt, m).astype(np.int64)
            fail_pos = r <= 0
            fail_ind = ~feasible | ~d2
            fail_dec = r2 >= r
            k = _first(fail_pos | fail_ind | fail_dec)
            if k is not None:
                s = _state_tuple(L, sub, k)
                s2 = _state_tuple(L, nxt, k)
                if fail_pos[k]:
                    best = (int(inside[k]), "rank-positive", s)
                elif fail_ind[k]:
                    best = (int(inside[k]), "inductive", (s, s2))
                else:
                    best = (int(inside[k]), "rank-decrease", (s, s2))
        k = _first(bad_exit)
        if k is not None and (best is None or k < best[0]):
            best = (k, "exit", _state_tuple(L, cols, k))
        return None if best is None else best[1:]

    hit = _run_chunks(L, scan, jobs, budget, chunk)
    if hit is None:
        return Verdict.okay()
    return Verdict.violation(*hit)


def _first_initial_in(L: LoopSystem, s_fn, budget: int) -> State | None:
    comp = sem.compiled(L)

    def scan(lo, hi):
        cols = sem.columns(L, lo, hi)
        n = hi - lo
        m = E.eval_columns(comp.v_init, cols, n).astype(bool) & \
            E.eval_columns(s_fn, cols, n).astype(bool)
        k = _first(m)
        return None if k is None else _state_tuple(L, cols, k)

    return _run_chunks(L, scan, 1, budget, sem.DEFAULT_CHUNK)


def check_safety(L: LoopSystem, c: SafetyCertificate | Expr, mode: str | None = None,
                 x0: State | None = None, jobs: int = 1,
                 budget: int = sem.DEFAULT_BUDGET, chunk: int = sem.DEFAULT_CHUNK) -> Verdict:
    """Validate ``S`` under one of four readings.

    ``safety``: initial states lie in S, S is closed under every step and
    S exits satisfy the assertion.  ``doomed-head``: as before but S exits
    violate the assertion.  ``doomed-state``: some initial state lies in S
    (``x0`` if given), closure under every step, exits violate.
    ``partial-danger``: like doomed-state but closure only needs one
    successor per state.
    """
    if isinstance(c, Expr):
        c = SafetyCertificate(c, mode or "safety", x0)
    mode = mode or c.mode
    x0 = x0 if x0 is not None else c.x0
    if mode not in SAFETY_MODES:
        raise ValueError(f"unknown check mode {mode!r}")
    sem._check_budget(L, budget)
    w = L.width
    comp = sem.compiled(L)
    s_fn = E.compile_vec(c.S, w)

    if mode in ("doomed-state", "partial-danger"):
        if x0 is not None:
            x0 = tuple(x0)
            if len(x0) != L.nvars or not sem.holds_init(L, x0) or \
                    not E.evaluate(c.S, sem.env_of(L, x0), w):
                return Verdict.violation("base", x0)
        elif _first_initial_in(L, s_fn, budget) is None:
            first = next(iter(sem.initial_states(L, budget, limit=1)), None)
            return Verdict.violation("base", first if first is not None else ())

    combos = [{k: np.int64(v) for k, v in nd.items()} for nd in sem.nondet_combos(L)]
    want_assert = mode == "safety"
    every = mode != "partial-danger"
    check_base = mode in ("safety", "doomed-head")

    def scan(lo: int, hi: int):
        n = hi - lo
        cols = sem.columns(L, lo, hi)
        s = E.eval_columns(s_fn, cols, n).astype(bool)
        g = E.eval_columns(comp.v_guard, cols, n).astype(bool)
        a = E.eval_columns(comp.v_assert, cols, n).astype(bool)
        found = []
        if check_base:
            i = E.eval_columns(comp.v_init, cols, n).astype(bool)
            k = _first(i & ~s)
            if k is not None:
                found.append((k, 0, "base", _state_tuple(L, cols, k)))
        k = _first(s & ~g & (~a if want_assert else a))
        if k is not None:
            found.append((k, 2, "exit", _state_tuple(L, cols, k)))
        inside = np.flatnonzero(s & g)
        if len(inside):
            sub = {v: cols[v][inside] for v in L.vars}
            m = len(inside)
            bad = np.zeros(m, dtype=bool) if every else np.ones(m, dtype=bool)
            succ = {v: np.zeros(m, dtype=np.int64) for v in L.vars}
            for nd in combos:
                nxt = sem.step_columns(L, sub, nd, m)
                out = ~E.eval_columns(s_fn, nxt, m).astype(bool)
                if every:
                    new = out & ~bad
                    for v in L.vars:
                        succ[v] = np.where(new, nxt[v], succ[v])
                    bad |= out
                else:
                    bad &= out
                    if not bad.any():
                        break
            k = _first(bad)
            if k is not None:
                st = _state_tuple(L, sub, k)
                wit = (st, _state_tuple(L, succ, k)) if every else st
                found.append((int(inside[k]), 1, "inductive", wit))
        if not found:
            return None
        _, _, crit, wit = min(found, key=lambda t: (t[0], t[1]))
        return crit, wit

    hit = _run_chunks(L, scan, jobs, budget, chunk)
    if hit is None:
        return Verdict.okay()
    return Verdict.violation(*hit)


def check(L: LoopSystem, c, jobs: int = 1, budget: int = sem.DEFAULT_BUDGET) -> Verdict:
    if isinstance(c, DangerCertificate):
        return check_danger(L, c, jobs=jobs, budget=budget)
    return check_safety(L, c, jobs=jobs, budget=budget)


def extract_trace(L: LoopSystem, c: DangerCertificate) -> Trace:
    """Run the certificate's Skolem choices from ``x0`` to the failing exit.

    A valid certificate strictly decreases a positive integer ranking on
    every step, so at most ``R(x0)`` steps are needed; a longer run, or one
    that ends in a state satisfying the assertion, means the certificate
    was not valid.
    """
    r0 = int(E.evaluate(c.R, sem.env_of(L, c.x0), L.width, wrap=False))
    limit = min(max(0, r0), L.state_count)
    trace = sem.run(L, c.x0, c.skolem, max_steps=limit)
    if trace.status is TraceStatus.TRUNCATED:
        raise CertificateInvalid(f"run from x0 did not exit within {limit} steps")
    if sem.holds_assert(L, trace.last):
        raise CertificateInvalid("run from x0 exits in a state satisfying the assertion")
    return trace


# ------------------------------------------------------------- file format

def program_digest(text_or_prog) -> str:
    """SHA-256 of the canonical pretty-printed program (before --subst)."""
    from .syntax import SourceProgram, parse, pretty
    prog = text_or_prog if isinstance(text_or_prog, SourceProgram) else parse(text_or_prog)
    return hashlib.sha256(pretty(prog).encode()).hexdigest()


@dataclass(frozen=True)
class CertificateFile:
    """A certificate together with the program context it was proved for."""
    cert: object
    digest: str
    width: int
    subst: tuple[tuple[int, int], ...] = ()
    vars: tuple[str, ...] = field(default=())

    @property
    def kind(self) -> str:
        return "danger" if isinstance(self.cert, DangerCertificate) else "safety"

    @property
    def subst_map(self) -> dict[int, int]:
        return dict(self.subst)


def format_subst(subst) -> str:
    items = sorted(dict(subst).items())
    return ",".join(f"{a}={b}" for a, b in items) if items else "-"


def parse_subst(text: str) -> tuple[tuple[int, int], ...]:
    text = text.strip()
    if text in ("", "-"):
        return ()
    out = {}
    for part in text.split(","):
        if "=" not in part:
            raise CertificateFormatError(f"bad substitution {part!r}, expected A=B")
        a, b = part.split("=", 1)
        try:
            out[int(a)] = int(b)
        except ValueError:
            raise CertificateFormatError(f"bad substitution {part!r}") from None
    return tuple(sorted(out.items()))


def dumps(cf: CertificateFile) -> str:
    c = cf.cert
    lines = [f"kind {cf.kind}", f"program {cf.digest}", f"width {cf.width}",
             f"subst {format_subst(cf.subst)}"]
    if isinstance(c, DangerCertificate):
        lines.append(f"D {E.to_source(c.D)}")
        lines.append(f"R {E.to_source(c.R)}")
        for key, e in c.skolem.items():
            lines.append(f"N {key} {E.to_source(e)}")
        names = cf.vars or tuple(f"v{i}" for i in range(len(c.x0)))
        lines.append("x0 " + " ".join(f"{v}={x}" for v, x in zip(names, c.x0)))
    else:
        lines.append(f"mode {c.mode}")
        lines.append(f"S {E.to_source(c.S)}")
        if c.x0 is not None:
            names = cf.vars or tuple(f"v{i}" for i in range(len(c.x0)))
            lines.append("x0 " + " ".join(f"{v}={x}" for v, x in zip(names, c.x0)))
    return "\n".join(lines) + "\n"


def loads(text: str) -> CertificateFile:
    from .errors import ParseError
    from .syntax import parse_expr
    fields: dict[str, str] = {}
    skolem: dict[str, Expr] = {}
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, rest = line.partition(" ")
        try:
            if key == "N":
                site, _, body = rest.strip().partition(" ")
                if not body:
                    raise CertificateFormatError(f"line {no}: N needs a key and an expression")
                skolem[site] = parse_expr(body)
            elif key in ("kind", "program", "width", "subst", "D", "R", "S", "mode", "x0"):
                if key in fields:
                    raise CertificateFormatError(f"line {no}: duplicate field {key!r}")
                fields[key] = rest.strip()
            else:
                raise CertificateFormatError(f"line {no}: unknown field {key!r}")
        except ParseError as e:
            raise CertificateFormatError(f"line {no}: {e}") from None
    for need in ("kind", "program", "width"):
        if need not in fields:
            raise CertificateFormatError(f"missing field {need!r}")
    try:
        width = int(fields["width"])
    except ValueError:
        raise CertificateFormatError("width must be an integer") from None
    names, x0 = (), None
    if "x0" in fields:
        pairs = [p.split("=", 1) for p in fields["x0"].split()]
        if any(len(p) != 2 for p in pairs):
            raise CertificateFormatError("x0 entries must look like name=value")
        names = tuple(p[0] for p in pairs)
        x0 = tuple(int(p[1]) for p in pairs)
    try:
        if fields["kind"] == "danger":
            for need in ("D", "R", "x0"):
                if need not in fields:
                    raise CertificateFormatError(f"danger certificate lacks {need!r}")
            cert = DangerCertificate(parse_expr(fields["D"]), parse_expr(fields["R"]), skolem, x0)
        elif fields["kind"] == "safety":
            if "S" not in fields:
                raise CertificateFormatError("safety certificate lacks 'S'")
            cert = SafetyCertificate(parse_expr(fields["S"]), fields.get("mode", "safety"), x0)
        else:
            raise CertificateFormatError(f"unknown kind {fields['kind']!r}")
    except (ParseError, SortError, ValueError) as e:
        raise CertificateFormatError(str(e)) from None
    return CertificateFile(cert, fields["program"], width, parse_subst(fields.get("subst", "-")),
                           names)


def bind(cf: CertificateFile, L: LoopSystem) -> object:
    """Check that a parsed certificate talks about the variables of ``L``."""
    c = cf.cert
    x0 = getattr(c, "x0", None)
    if x0 is not None and cf.vars and tuple(cf.vars) != L.vars:
        raise CertificateFormatError(
            f"x0 names {', '.join(cf.vars)} but the program has {', '.join(L.vars)}")
    exprs = [c.D, c.R, *c.skolem.values()] if isinstance(c, DangerCertificate) else [c.S]
    for e in exprs:
        unknown = E.free_vars(e) - set(L.vars)
        if unknown:
            raise CertificateFormatError(f"certificate mentions unknown variables {sorted(unknown)}")
    if isinstance(c, DangerCertificate):
        names = {s.name for s in L.sites} | set(L.vars)
        bad = set(c.skolem) - names
        if bad:
            raise CertificateFormatError(f"Skolem keys {sorted(bad)} name no site or variable")
    return c
