"""Search space for certificate components."""

from __future__ import annotations

from dataclasses import dataclass, replace

from .. import expr as E
from ..loop import LoopSystem

INT_OPS = ("neg", "add", "sub", "mul", "ite")
BOOL_OPS = ("not", "eq", "ne", "lt", "le", "and", "or")


@dataclass(frozen=True)
class Grammar:
    """Bounds and building blocks of the expression enumeration.

    ``max_size`` bounds each component (node count); ``max_total`` bounds
    the sum over all components of one certificate.  Constants come from
    ``constants`` together with every integer in ``const_range``.
    """
    max_size: int = 7
    max_total: int | None = None
    constants: tuple[int, ...] = (0, 1, -1)
    const_range: tuple[int, int] | None = None
    int_ops: tuple[str, ...] = INT_OPS
    bool_ops: tuple[str, ...] = BOOL_OPS
    level_cap: int = 6000
    sample_size: int = 128

    @property
    def total(self) -> int:
        return self.max_total if self.max_total is not None else 3 * self.max_size

    def pool(self, width: int | None = None) -> tuple[int, ...]:
        vals = list(self.constants)
        if self.const_range is not None:
            lo, hi = self.const_range
            vals += range(lo, hi + 1)
        if width is not None:
            lo, hi = -(1 << (width - 1)), (1 << (width - 1)) - 1
            vals = [v for v in vals if lo <= v <= hi]
        return tuple(dict.fromkeys(vals))

    def with_(self, **kw) -> "Grammar":
        return replace(self, **kw)


def program_literals(L: LoopSystem) -> list[int]:
    lits = set()
    for e in (L.init, L.guard, L.assertion, *L.updates):
        lits |= E.literals(e)
    return sorted(lits)


def for_loop(L: LoopSystem, **kw) -> Grammar:
    """Default grammar: 0, 1, -1 plus the program's literals."""
    extra = kw.pop("constants", ())
    base = [0, 1, -1, *program_literals(L), *extra]
    return Grammar(constants=tuple(dict.fromkeys(base)), **kw)


__all__ = ["Grammar", "for_loop", "program_literals", "INT_OPS", "BOOL_OPS"]
