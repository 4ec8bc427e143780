"""Size-ordered expression enumeration with observational-equivalence pruning.

Expressions are built level by level (a level is all kept expressions of
one sort and one node count).  Each new expression is evaluated on a fixed
sample of states; an expression whose value vector equals the vector of an
earlier one is dropped, so each level keeps the first representative of
every observed behaviour in enumeration order.

Every kept expression also remembers its recipe (operator and child ids),
which lets the bank evaluate whole levels at arbitrary new states with a
handful of vectorised operations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import expr as E
from ..expr import BOOL, INT, Expr

_BLOCK = 1 << 22  # values per vectorised block


@dataclass
class _Group:
    op: str
    start: int
    end: int
    a: np.ndarray | None = None
    b: np.ndarray | None = None
    c: np.ndarray | None = None
    leaf: object = None  # variable name, constant or bool for leaves


class ExprBank:
    def __init__(self, variables, width: int, wrap: bool, constants, int_ops, bool_ops,
                 sample: dict[str, np.ndarray], cap: int = 6000):
        self.vars = tuple(variables)
        self.width = width
        self.wrap = wrap
        self.constants = tuple(constants)
        self.int_ops = tuple(int_ops)
        self.bool_ops = tuple(bool_ops)
        self.cap = cap
        self.sample = {v: np.asarray(sample[v], dtype=np.int64) for v in self.vars}
        self.nsample = len(next(iter(self.sample.values()))) if self.vars else 1
        self.exprs: list[Expr] = []
        self.sorts: list[str] = []
        self.sizes: list[int] = []
        self.has_var: list[bool] = []
        self.levels: dict[tuple[str, int], tuple[int, int]] = {}
        self.groups: list[_Group] = []
        self.sig = np.zeros((0, self.nsample), dtype=np.int64)
        self._seen = {BOOL: set(), INT: set()}
        rng = np.random.default_rng(0)
        self._h1 = rng.integers(1, 1 << 62, size=self.nsample, dtype=np.int64) | 1
        self._h2 = rng.integers(1, 1 << 62, size=self.nsample, dtype=np.int64) | 1
        self.built = 0
        self.truncated = False
        self.pool = {v: np.zeros(0, dtype=np.int64) for v in self.vars}
        self.pts = np.zeros((0, 0), dtype=np.int64)

    # ------------------------------------------------------------ helpers
    def _wrap(self, x):
        if not self.wrap:
            return x
        half = np.int64(1 << (self.width - 1))
        mask = np.int64((1 << self.width) - 1)
        return ((x + half) & mask) - half

    def _apply(self, op: str, A, B=None, C=None):
        if op == "neg":
            return self._wrap(-A)
        if op == "add":
            return self._wrap(A + B)
        if op == "sub":
            return self._wrap(A - B)
        if op == "mul":
            return self._wrap(A * B)
        if op == "eq":
            return (A == B).astype(np.int64)
        if op == "ne":
            return (A != B).astype(np.int64)
        if op == "lt":
            return (A < B).astype(np.int64)
        if op == "le":
            return (A <= B).astype(np.int64)
        if op == "and":
            return A & B
        if op == "or":
            return A | B
        if op == "not":
            return 1 - A
        if op == "ite":
            return np.where(A != 0, B, C)
        raise ValueError(op)

    def _leaf_row(self, g: _Group, cols, n):
        if g.op == "var":
            return np.asarray(cols[g.leaf], dtype=np.int64)
        if g.op == "const":
            v = int(E.wrap_int(g.leaf, self.width)) if self.wrap else int(g.leaf)
            return np.full(n, v, dtype=np.int64)
        return np.full(n, int(bool(g.leaf)), dtype=np.int64)

    def _keys(self, rows: np.ndarray) -> list[bytes]:
        h = np.stack([rows @ self._h1, rows @ self._h2], axis=1)
        return [bytes(r) for r in np.ascontiguousarray(h).view(np.uint8).reshape(len(rows), 16)]

    def _make_expr(self, op, a=None, b=None, c=None) -> Expr:
        X = self.exprs
        if op == "neg":
            return E.neg(X[a])
        if op in E.ARITH:
            return E.arith(op, X[a], X[b])
        if op in E.COMPARE:
            return E.compare(op, X[a], X[b])
        if op == "and":
            return E.and_(X[a], X[b])
        if op == "or":
            return E.or_(X[a], X[b])
        if op == "not":
            return E.not_(X[a])
        if op == "ite":
            return E.ite(X[a], X[b], X[c])
        raise ValueError(op)

    # ------------------------------------------------------------ building
    def ids(self, sort: str, size: int) -> range:
        self.ensure(size)
        lo, hi = self.levels.get((sort, size), (0, 0))
        return range(lo, hi)

    def ensure(self, size: int) -> None:
        while self.built < size:
            self._build(self.built + 1)

    def _add_leaf(self, op, value, sort, has_var, row):
        key = self._keys(row[None, :])[0]
        if key in self._seen[sort]:
            return
        self._seen[sort].add(key)
        i = len(self.exprs)
        if op == "var":
            e = E.var(value)
        elif op == "const":
            e = E.const(int(E.wrap_int(value, self.width)) if self.wrap else int(value))
        else:
            e = E.boolean(value)
        self.exprs.append(e)
        self.sorts.append(sort)
        self.sizes.append(1)
        self.has_var.append(has_var)
        self.groups.append(_Group(op, i, i + 1, leaf=value))
        self.sig = np.vstack([self.sig, row[None, :]])

    def _build(self, k: int) -> None:
        start_all = len(self.exprs)
        if k == 1:
            lo = len(self.exprs)
            for v in self.vars:
                self._add_leaf("var", v, INT, True, self.sample[v])
            for c in self.constants:
                cv = int(E.wrap_int(c, self.width)) if self.wrap else int(c)
                self._add_leaf("const", c, INT, False, np.full(self.nsample, cv, dtype=np.int64))
            self.levels[(INT, 1)] = (lo, len(self.exprs))
            lo = len(self.exprs)
            for b in (True, False):
                self._add_leaf("bool", b, BOOL, False,
                               np.full(self.nsample, int(b), dtype=np.int64))
            self.levels[(BOOL, 1)] = (lo, len(self.exprs))
        else:
            for sort in (INT, BOOL):
                lo = len(self.exprs)
                count = 0
                for op, blocks in self._candidates(sort, k):
                    for a, b, c in blocks:
                        count += self._absorb(op, sort, k, a, b, c, self.cap - count)
                        if count >= self.cap:
                            self.truncated = True
                            break
                    if count >= self.cap:
                        break
                self.levels[(sort, k)] = (lo, len(self.exprs))
        self.built = k
        if self.pts.shape[1]:
            new = self._eval_groups(self.pool, self.pts.shape[1], start_all, prefix=self.pts)
            self.pts = np.vstack([self.pts, new])
        elif self.pts.shape[0] != len(self.exprs):
            self.pts = np.zeros((len(self.exprs), 0), dtype=np.int64)

    def _range(self, sort, size):
        lo, hi = self.levels.get((sort, size), (0, 0))
        return np.arange(lo, hi, dtype=np.int64)

    def _pairs(self, A, B, same: bool, need_var: bool, both_var: bool = False):
        hv = np.array(self.has_var, dtype=bool)
        if not len(A) or not len(B):
            return
        step = max(1, _BLOCK // max(1, len(B) * self.nsample))
        for i in range(0, len(A), step):
            a = np.repeat(A[i:i + step], len(B))
            b = np.tile(B, len(A[i:i + step]))
            keep = np.ones(len(a), dtype=bool)
            if same:
                keep &= a <= b
            if both_var:
                keep &= hv[a] & hv[b]
            elif need_var:
                keep &= hv[a] | hv[b]
            if keep.any():
                yield a[keep], b[keep], None

    def _candidates(self, sort, k):
        hv = np.array(self.has_var, dtype=bool)
        if sort == INT:
            for op in self.int_ops:
                if op == "neg":
                    A = self._range(INT, k - 1)
                    A = A[hv[A]] if len(A) else A
                    yield op, ([(A, None, None)] if len(A) else [])
                elif op in ("add", "sub", "mul"):
                    def gen(op=op):
                        for i in range(1, k - 1):
                            j = k - 1 - i
                            if op != "sub" and i > j:
                                continue
                            yield from self._pairs(self._range(INT, i), self._range(INT, j),
                                                   same=(op != "sub" and i == j), need_var=True)
                    yield op, gen()
                elif op == "ite":
                    def gen3():
                        for i in range(1, k - 2):
                            C = self._range(BOOL, i)
                            C = C[hv[C]] if len(C) else C
                            for j in range(1, k - 1 - i):
                                l = k - 1 - i - j
                                if l < 1:
                                    continue
                                A, B = self._range(INT, j), self._range(INT, l)
                                if not len(C) or not len(A) or not len(B):
                                    continue
                                for cc in C:
                                    for a, b, _ in self._pairs(A, B, False, False):
                                        yield np.full(len(a), cc), a, b
                    yield op, gen3()
        else:
            for op in self.bool_ops:
                if op == "not":
                    A = self._range(BOOL, k - 1)
                    A = A[hv[A]] if len(A) else A
                    yield op, ([(A, None, None)] if len(A) else [])
                elif op in ("eq", "ne", "lt", "le"):
                    def gen(op=op):
                        for i in range(1, k - 1):
                            j = k - 1 - i
                            if op in ("eq", "ne") and i > j:
                                continue
                            yield from self._pairs(self._range(INT, i), self._range(INT, j),
                                                   same=(op in ("eq", "ne") and i == j),
                                                   need_var=True)
                    yield op, gen()
                elif op in ("and", "or"):
                    def gen(op=op):
                        for i in range(1, k - 1):
                            j = k - 1 - i
                            if i > j:
                                continue
                            yield from self._pairs(self._range(BOOL, i), self._range(BOOL, j),
                                                   same=(i == j), need_var=False, both_var=True)
                    yield op, gen()

    def _absorb(self, op, sort, k, a, b, c, room: int) -> int:
        S = self.sig
        rows = self._apply(op, S[a], None if b is None else S[b], None if c is None else S[c])
        keys = self._keys(rows)
        seen = self._seen[sort]
        kept = []
        for i, key in enumerate(keys):
            if key in seen:
                continue
            seen.add(key)
            kept.append(i)
            if len(kept) >= room:
                break
        if not kept:
            return 0
        kept = np.array(kept, dtype=np.int64)
        start = len(self.exprs)
        ka = a[kept]
        kb = None if b is None else b[kept]
        kc = None if c is None else c[kept]
        for i in range(len(kept)):
            self.exprs.append(self._make_expr(op, int(ka[i]),
                                              None if kb is None else int(kb[i]),
                                              None if kc is None else int(kc[i])))
            self.sorts.append(sort)
            self.sizes.append(k)
            self.has_var.append(True)
        self.groups.append(_Group(op, start, len(self.exprs), ka, kb, kc))
        self.sig = np.vstack([self.sig, rows[kept]])
        return len(kept)

    # ------------------------------------------------------------ evaluation
    def _eval_groups(self, cols, n, start: int = 0, upto: int | None = None, prefix=None):
        """Values of entries ``start..upto`` at ``n`` points given by ``cols``.

        ``prefix`` holds the already known values of entries below ``start``.
        """
        upto = len(self.exprs) if upto is None else upto
        V = np.zeros((upto, n), dtype=np.int64)
        if prefix is not None and start:
            V[:start] = prefix[:start]
        for g in self.groups:
            if g.end <= start or g.start >= upto:
                continue
            hi = min(g.end, upto)
            if g.leaf is not None or g.op in ("var", "const", "bool"):
                V[g.start:hi] = self._leaf_row(g, cols, n)
                continue
            m = hi - g.start
            A = V[g.a[:m]]
            B = None if g.b is None else V[g.b[:m]]
            C = None if g.c is None else V[g.c[:m]]
            V[g.start:hi] = self._apply(g.op, A, B, C)
        return V[start:upto]

    def eval_points(self, cols, n: int, upto: int | None = None) -> np.ndarray:
        return self._eval_groups(cols, n, 0, upto)

    def add_points(self, cols) -> None:
        n = len(next(iter(cols.values()))) if cols else 0
        if not n:
            return
        new = self._eval_groups(cols, n)
        for v in self.vars:
            self.pool[v] = np.concatenate([self.pool[v], np.asarray(cols[v], dtype=np.int64)])
        old = self.pts if self.pts.shape[0] == len(self.exprs) else \
            np.zeros((len(self.exprs), len(self.pool[self.vars[0]]) - n if self.vars else 0),
                     dtype=np.int64)
        self.pts = np.hstack([old, new])

    def values(self, i: int) -> np.ndarray:
        return self.pts[i]
