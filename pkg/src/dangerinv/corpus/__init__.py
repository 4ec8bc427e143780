"""Shipped example programs and their reference certificates."""

from __future__ import annotations

from importlib import resources

from ..certificate import CertificateFile, DangerCertificate, loads, program_digest
from ..loop import LoopSystem, load
from ..syntax import parse_expr

PROGRAMS = ("fig3a", "fig3b", "fig3c", "fig4a", "fig4b", "fig4c", "fig4d", "fig4e", "fig7")
BIG = 1000000  # the deep-bug bound used in the fig4 programs


def _files():
    return resources.files(__name__)


def program_text(name: str) -> str:
    return (_files() / f"{name}.loop").read_text()


def certificate_names() -> list[str]:
    return sorted(p.name[:-5] for p in _files().iterdir() if p.name.endswith(".cert"))


def certificate_text(name: str) -> str:
    return (_files() / f"{name}.cert").read_text()


def certificate(name: str) -> CertificateFile:
    return loads(certificate_text(name))


def path_of(name: str) -> str:
    return str(_files() / f"{name}.loop")


def program(name: str, width: int = 8, subst: dict | None = None) -> LoopSystem:
    return load(program_text(name), width, subst, name)


def for_certificate(name: str) -> tuple[LoopSystem, CertificateFile]:
    """The program a shipped certificate was written for, scaled as recorded."""
    cf = certificate(name)
    prog = name.split("-")[0]
    return program(prog, cf.width, cf.subst_map), cf


def _danger(D: str, R: str, skolem: dict[str, str], x0) -> DangerCertificate:
    return DangerCertificate(parse_expr(D), parse_expr(R),
                             {k: parse_expr(v) for k, v in skolem.items()}, tuple(x0))


# Reference proofs for the deep-bug programs at a given loop bound.  The
# "literal" set uses the predicates as usually written for unbounded
# integers; the "wrap" set restates them so they stay inductive when the
# counters wrap around at the top of the range.
def fig4_golden(name: str, bound: int = 16, wrap_safe: bool = False) -> DangerCertificate:
    R = f"{bound} - x"
    if name == "fig4a":
        D = "y == x + 1" if wrap_safe else "x < y"
        return _danger(D, R, {"y": "y + 1"}, (0, 1))
    if name == "fig4b":
        D = "y == x + 1" if wrap_safe else "x < y"
        return _danger(D, R, {"x": "x + 1", "y": "y + 1"}, (0, 1))
    if name == "fig4c":
        return _danger("y == (x < 1 ? 1 : x)", R, {"y": "x < 1 ? y : y + 1"}, (0, 1))
    raise KeyError(name)


def golden_file(name: str, bound: int = 16, width: int = 8, wrap_safe: bool = False) -> str:
    from ..certificate import dumps
    L = program(name, width, {BIG: bound})
    cert = fig4_golden(name, bound, wrap_safe)
    return dumps(CertificateFile(cert, program_digest(program_text(name)), width,
                                 ((BIG, bound),), L.vars))
