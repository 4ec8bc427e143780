"""Danger invariants: certificates that a loop program can fail its assertion.

The package parses a small C-like loop language, compiles it into a
canonical transition system, and then either synthesises a danger
certificate (a predicate, a ranking function, Skolem choices and a doomed
initial state) or a safety invariant.  Certificates are validated by
exhaustive enumeration of the finite state space.
"""

from .errors import (BudgetExceeded, CertificateInvalid, DangerInvError, ParseError,
                     UnsupportedFeature)
from .loop import LoopSystem, desugar, load
from .syntax import parse, pretty

__all__ = ["BudgetExceeded", "CertificateInvalid", "DangerInvError", "LoopSystem",
           "ParseError", "UnsupportedFeature", "desugar", "load", "parse", "pretty"]
__version__ = "0.1.0"
