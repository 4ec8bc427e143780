"""Random small loop programs for property testing and benchmarking."""

from __future__ import annotations

import random

CMP = ("<", "<=", "==", "!=", ">", ">=")


class ProgramGenerator:
    """Programs with at most ``max_vars`` variables and small constants.

    Constants stay inside the signed range of ``width`` bits so the
    result always loads at that width.
    """

    def __init__(self, seed: int = 0, max_vars: int = 2, width: int = 3, max_body: int = 3):
        self.rng = random.Random(seed)
        self.max_vars = max_vars
        self.lo, self.hi = -(1 << (width - 1)), (1 << (width - 1)) - 1
        self.max_body = max_body

    def const(self) -> int:
        return self.rng.randint(max(self.lo, -2), min(self.hi, 3))

    def atom(self, names) -> str:
        return self.rng.choice(names) if self.rng.random() < 0.6 else str(self.const())

    def int_expr(self, names) -> str:
        r = self.rng.random()
        if r < 0.4:
            return self.atom(names)
        op = self.rng.choice(("+", "-", "+", "*"))
        return f"{self.rng.choice(names)} {op} {self.atom(names)}"

    def comparison(self, names) -> str:
        v = self.rng.choice(names)
        rhs = self.atom(names)
        if rhs == v:
            rhs = str(self.const())
        return f"{v} {self.rng.choice(CMP)} {rhs}"

    def cond(self, names) -> str:
        c = self.comparison(names)
        if self.rng.random() < 0.15:
            c = f"{c} {self.rng.choice(('&&', '||'))} {self.comparison(names)}"
        return c

    def statement(self, names, depth: int = 0) -> str:
        r = self.rng.random()
        v = self.rng.choice(names)
        if r < 0.35:
            return f"{v} = {self.int_expr(names)};"
        if r < 0.5:
            return f"{v}{self.rng.choice(('++', '--'))};"
        if r < 0.58:
            return f"{v} = *;"
        if r < 0.78 and depth < 1:
            head = "*" if self.rng.random() < 0.6 else self.cond(names)
            then = self.statement(names, depth + 1)
            if self.rng.random() < 0.3:
                return f"if ({head}) {then} else {self.statement(names, depth + 1)}"
            return f"if ({head}) {then}"
        if r < 0.88:
            head = "*" if self.rng.random() < 0.7 else self.cond(names)
            return f"if ({head}) break;"
        return f"assert({self.cond(names)});"

    def program(self) -> str:
        n = self.rng.randint(1, self.max_vars)
        names = ["x", "y"][:n]
        lines = []
        for v in names:
            lines.append(f"int {v} = *;" if self.rng.random() < 0.3 else f"int {v} = {self.const()};")
        if self.rng.random() < 0.2:
            lines.append(f"assume({self.cond(names)});")
        lines.append(f"while ({self.cond(names)}) {{")
        for _ in range(self.rng.randint(1, self.max_body)):
            lines.append("  " + self.statement(names))
        lines.append("}")
        if self.rng.random() < 0.9:
            lines.append(f"assert({self.cond(names)});")
        return "\n".join(lines) + "\n"


def random_program(seed: int, max_vars: int = 2, width: int = 3) -> str:
    return ProgramGenerator(seed, max_vars, width).program()


def random_programs(count: int, seed: int = 0, max_vars: int = 2, width: int = 3) -> list[str]:
    gen = ProgramGenerator(seed, max_vars, width)
    return [gen.program() for _ in range(count)]
