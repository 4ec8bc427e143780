"""Forward interval analysis of a loop system.

Abstract states are boxes: one closed interval per variable, or bottom.
The analysis annotates five locations (entry, loop head, body entry, body
exit, loop exit) by plain Kleene iteration at the loop head; widening with
thresholds can be switched on after a given number of rounds, and is
forced once the iteration cap is reached.

Arithmetic on endpoints is exact; any result that leaves the signed
``width``-bit range becomes the full range, which keeps the analysis sound
for wrap-around semantics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import expr as E
from .expr import Expr
from .loop import LoopSystem

LOCATIONS = ("entry", "loop-head", "body-entry", "body-exit", "loop-exit")
Interval = tuple[int, int]


@dataclass(frozen=True)
class IntervalBox:
    """Per-variable intervals; ``bounds is None`` encodes bottom."""
    bounds: tuple[tuple[str, Interval], ...] | None

    @classmethod
    def bottom(cls) -> "IntervalBox":
        return cls(None)

    @classmethod
    def of(cls, d: dict[str, Interval] | None) -> "IntervalBox":
        return cls(None if d is None else tuple(d.items()))

    @property
    def is_bottom(self) -> bool:
        return self.bounds is None

    def as_dict(self) -> dict[str, Interval] | None:
        return None if self.bounds is None else dict(self.bounds)

    def __getitem__(self, var: str) -> Interval:
        return dict(self.bounds)[var]

    def contains(self, state: dict[str, int]) -> bool:
        if self.bounds is None:
            return False
        return all(lo <= state[v] <= hi for v, (lo, hi) in self.bounds)

    def __str__(self) -> str:
        if self.bounds is None:
            return "bottom"
        return ", ".join(f"{v}=[{lo},{hi}]" for v, (lo, hi) in self.bounds)


@dataclass(frozen=True)
class CfgAnnotation:
    boxes: dict[str, IntervalBox]
    iterations: int
    widened: bool = False
    vars: tuple[str, ...] = field(default=())

    def __getitem__(self, loc: str) -> IntervalBox:
        return self.boxes[loc]

    def to_text(self, only: tuple[str, ...] | None = None) -> str:
        lines = []
        for loc in LOCATIONS:
            box = self.boxes[loc]
            if box.is_bottom:
                lines.append(f"{loc}: bottom")
                continue
            d = box.as_dict()
            names = only or tuple(d)
            lines.append(f"{loc}: " + ", ".join(f"{v}=[{d[v][0]},{d[v][1]}]" for v in names))
        lines.append(f"iterations: {self.iterations}" + (" (widened)" if self.widened else ""))
        return "\n".join(lines)

    def to_json(self) -> str:
        data = {loc: (None if b.is_bottom else {v: list(iv) for v, iv in b.bounds})
                for loc, b in self.boxes.items()}
        return json.dumps({"locations": data, "iterations": self.iterations,
                           "widened": self.widened}, sort_keys=True)


class _Domain:
    def __init__(self, L: LoopSystem):
        self.L = L
        self.lo = -(1 << (L.width - 1))
        self.hi = (1 << (L.width - 1)) - 1
        self.top = (self.lo, self.hi)

    def clamp(self, iv: Interval) -> Interval:
        lo, hi = iv
        if lo < self.lo or hi > self.hi:
            return self.top
        return iv

    # -- expressions
    def eval(self, e: Expr, box: dict[str, Interval]) -> Interval:
        """Interval of an expression; booleans are intervals within [0, 1]."""
        op = e.op
        if op == "const":
            v = int(E.wrap_int(e.value, self.L.width))
            return (v, v)
        if op == "bool":
            return (int(e.value), int(e.value))
        if op == "var":
            return box[e.value]
        if op == "ndi":
            return self.top
        if op == "ndb":
            return (0, 1)
        if op in ("add", "sub", "mul"):
            (a, b), (c, d) = self.eval(e.args[0], box), self.eval(e.args[1], box)
            if op == "add":
                return self.clamp((a + c, b + d))
            if op == "sub":
                return self.clamp((a - d, b - c))
            prods = (a * c, a * d, b * c, b * d)
            return self.clamp((min(prods), max(prods)))
        if op == "neg":
            a, b = self.eval(e.args[0], box)
            return self.clamp((-b, -a))
        if op in E.COMPARE:
            (a, b), (c, d) = self.eval(e.args[0], box), self.eval(e.args[1], box)
            must, may = {
                "lt": (b < c, a < d), "le": (b <= c, a <= d),
                "gt": (a > d, b > c), "ge": (a >= d, b >= c),
                "eq": (a == b == c == d, not (b < c or d < a)),
                "ne": (b < c or d < a, not (a == b == c == d)),
            }[op]
            return (1, 1) if must else (0, 1) if may else (0, 0)
        if op == "not":
            a, b = self.eval(e.args[0], box)
            return (1 - b, 1 - a)
        if op in ("and", "or"):
            vals = [self.eval(x, box) for x in e.args]
            if op == "and":
                return (min(v[0] for v in vals), min(v[1] for v in vals))
            return (max(v[0] for v in vals), max(v[1] for v in vals))
        if op == "ite":
            c = self.eval(e.args[0], box)
            out = None
            if c[1] == 1:
                tb = self.refine(box, e.args[0], True)
                if tb is not None:
                    out = self.eval(e.args[1], tb)
            if c[0] == 0:
                fb = self.refine(box, e.args[0], False)
                if fb is not None:
                    iv = self.eval(e.args[2], fb)
                    out = iv if out is None else (min(out[0], iv[0]), max(out[1], iv[1]))
            if out is None:  # unreachable branch combination
                return self.eval(e.args[1], box)
            return out
        if op == "table":
            rows, default, sort = e.value
            vals = [v for _, v in rows] + [default]
            if sort == E.BOOL:
                vals = [int(v != 0) for v in vals]
            return (min(vals), max(vals))
        raise ValueError(op)

    # -- conditions
    def refine(self, box, cond: Expr, truth: bool):
        """Narrow ``box`` to states where ``cond`` may evaluate to ``truth``."""
        if box is None:
            return None
        op = cond.op
        if op == "bool":
            return box if cond.value == truth else None
        if op == "not":
            return self.refine(box, cond.args[0], not truth)
        if (op == "and" and truth) or (op == "or" and not truth):
            out = box
            for _ in range(2):
                for c in cond.args:
                    out = self.refine(out, c, truth)
                    if out is None:
                        return None
            return out
        if op in ("and", "or"):
            out = None
            for c in cond.args:
                part = self.refine(box, c, truth)
                out = self.join(out, part)
            return out
        if op in E.COMPARE:
            cmp = op if truth else E.NEGATE[op]
            box = self._refine_cmp(box, cmp, cond.args[0], cond.args[1])
            if box is None:
                return None
            box = self._refine_cmp(box, E.MIRROR[cmp], cond.args[1], cond.args[0])
        if box is None:
            return None
        v = self.eval(cond, box)
        if truth and v[1] == 0 or (not truth and v[0] == 1):
            return None
        return box

    def _refine_cmp(self, box, cmp: str, lhs: Expr, rhs: Expr):
        if lhs.op != "var":
            return box
        lo, hi = box[lhs.value]
        c, d = self.eval(rhs, box)
        if cmp == "lt":
            hi = min(hi, d - 1)
        elif cmp == "le":
            hi = min(hi, d)
        elif cmp == "gt":
            lo = max(lo, c + 1)
        elif cmp == "ge":
            lo = max(lo, c)
        elif cmp == "eq":
            lo, hi = max(lo, c), min(hi, d)
        elif cmp == "ne" and c == d:
            if lo == c:
                lo += 1
            if hi == c:
                hi -= 1
        if lo > hi:
            return None
        out = dict(box)
        out[lhs.value] = (lo, hi)
        return out

    # -- lattice
    @staticmethod
    def join(a, b):
        if a is None:
            return b
        if b is None:
            return a
        return {v: (min(a[v][0], b[v][0]), max(a[v][1], b[v][1])) for v in a}

    def post(self, box):
        if box is None:
            return None
        return {v: self.eval(u, box) for v, u in zip(self.L.vars, self.L.updates)}

    def widen(self, old, new, thresholds):
        if old is None:
            return new
        if new is None:
            return old
        out = {}
        for v in old:
            (a, b), (c, d) = old[v], new[v]
            lo = a if c >= a else max([t for t in thresholds if t <= c], default=self.lo)
            hi = b if d <= b else min([t for t in thresholds if t >= d], default=self.hi)
            out[v] = (lo, hi)
        return out


def analyze(L: LoopSystem, widen_after: int | None = None, max_iterations: int = 4096,
            thresholds: tuple[int, ...] | None = None) -> CfgAnnotation:
    """Annotate the five program locations with interval boxes."""
    dom = _Domain(L)
    if thresholds is None:
        lits = set()
        for e in (L.init, L.guard, L.assertion, *L.updates):
            lits |= E.literals(e)
        thresholds = tuple(sorted({dom.lo, dom.hi, *lits, *(x - 1 for x in lits),
                                   *(x + 1 for x in lits)}))
    top = {v: dom.top for v in L.vars}
    entry = dom.refine(top, L.init, True)
    head = entry
    widened = False
    rounds = 0
    while True:
        rounds += 1
        body_in = dom.refine(head, L.guard, True)
        new = dom.join(entry, dom.post(body_in))
        use_widen = (widen_after is not None and rounds > widen_after) or rounds > max_iterations
        if use_widen:
            new = dom.widen(head, new, thresholds)
            widened = True
        if new == head:
            break
        head = new
    body_in = dom.refine(head, L.guard, True)
    boxes = {
        "entry": IntervalBox.of(entry),
        "loop-head": IntervalBox.of(head),
        "body-entry": IntervalBox.of(body_in),
        "body-exit": IntervalBox.of(dom.post(body_in)),
        "loop-exit": IntervalBox.of(dom.refine(head, L.guard, False)),
    }
    return CfgAnnotation(boxes, rounds, widened, L.vars)


@dataclass(frozen=True)
class Safe:
    pass


@dataclass(frozen=True)
class Alarm:
    box: IntervalBox  # loop-exit states that may violate the assertion

    def __str__(self) -> str:
        return f"alarm: {self.box}"


def classify_alarm(ann: CfgAnnotation, L: LoopSystem):
    """Alarm when some loop-exit state in the box may violate the assertion."""
    dom = _Domain(L)
    bad = dom.refine(ann["loop-exit"].as_dict(), L.assertion, False)
    return Safe() if bad is None else Alarm(IntervalBox.of(bad))
