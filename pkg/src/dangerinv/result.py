"""Outcomes of the solvers: a validated proof of either kind, or unknown."""

from __future__ import annotations

from dataclasses import dataclass, field

from .certificate import DangerCertificate, SafetyCertificate
from .semantics import Trace


@dataclass(frozen=True)
class DangerProved:
    cert: DangerCertificate
    trace: Trace
    iterations: int = 0
    stats: dict = field(default_factory=dict, compare=False)

    kind = "danger"


@dataclass(frozen=True)
class SafetyProved:
    cert: SafetyCertificate
    iterations: int = 0
    stats: dict = field(default_factory=dict, compare=False)

    kind = "safety"


@dataclass(frozen=True)
class Unknown:
    reason: str  # "budget", "grammar-exhausted" or "timeout"
    iterations: int = 0
    stats: dict = field(default_factory=dict, compare=False)

    kind = "unknown"


SolveResult = DangerProved | SafetyProved | Unknown
