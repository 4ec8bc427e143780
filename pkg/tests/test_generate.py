from __future__ import annotations

from dangerinv import load
from dangerinv.generate import random_program, random_programs


def test_deterministic():
    assert random_programs(5, seed=4) == random_programs(5, seed=4)
    assert random_program(7) == random_program(7)


def test_programs_load_at_their_width():
    for w in (3, 4):
        for text in random_programs(40, seed=11, width=w):
            L = load(text, w)
            assert 1 <= len(L.source_vars) <= 2
