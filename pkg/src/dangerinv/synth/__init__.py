"""Certificate synthesis: grammar, expression bank and the CEGIS driver."""

from .cegis import (Budget, CegisState, CounterexampleInput, GrammarExhausted, Ok, cegis,
                    synth_step, verif_step)
from .grammar import Grammar, for_loop

__all__ = ["Budget", "CegisState", "CounterexampleInput", "Grammar", "GrammarExhausted", "Ok",
           "cegis", "for_loop", "synth_step", "verif_step"]
