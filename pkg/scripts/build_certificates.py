"""Regenerate the certificate files shipped in the corpus directory.

Each certificate is checked before it is written; run from the repository
root with ``python3 scripts/build_certificates.py``.
"""

from __future__ import annotations

from pathlib import Path

from dangerinv import corpus
from dangerinv.certificate import (CertificateFile, DangerCertificate, SafetyCertificate, check,
                                   dumps, program_digest)
from dangerinv.syntax import parse_expr as P

OUT = Path(corpus.__file__).parent


def danger(D, R, skolem, x0):
    return DangerCertificate(P(D), P(R), {k: P(v) for k, v in skolem.items()}, tuple(x0))


def write(name: str, prog: str, width: int, subst: dict, cert, expect_ok: bool = True) -> None:
    L = corpus.program(prog, width, subst)
    v = check(L, cert)
    if v.ok != expect_ok:
        raise SystemExit(f"{name}: unexpected verdict {v.describe(L)}")
    cf = CertificateFile(cert, program_digest(corpus.program_text(prog)), width,
                         tuple(sorted(subst.items())), L.vars)
    (OUT / f"{name}.cert").write_text(dumps(cf))
    print(f"{name}: {'ok' if v.ok else v.describe(L)}")


def main() -> None:
    big = {corpus.BIG: 16}
    # The literal fig4a/fig4b predicates are not inductive once y wraps at
    # the top of the 8-bit range, so their check reports a violation.
    for name in ("fig4a", "fig4b", "fig4c"):
        write(name, name, 8, big, corpus.fig4_golden(name), expect_ok=(name == "fig4c"))
    for name in ("fig4a", "fig4b"):
        write(f"{name}-wrap", name, 8, big, corpus.fig4_golden(name, wrap_safe=True))
    write("fig4d", "fig4d", 8, {corpus.BIG: 100}, danger("a == 0", "100 - i", {}, (0, 0, 0)))
    write("fig4e", "fig4e", 4, {}, danger("x == 2 && len == -8 && i == 0", "1 - err", {},
                                          (2, -8, 0, 0)))
    write("fig3a", "fig3a", 8, {}, danger("x > 10", "1", {}, (11,)))
    write("fig3a-doomed", "fig3a", 8, {}, SafetyCertificate(P("x > 10"), "doomed-state", (11,)))
    write("fig3b", "fig3b", 8, {}, danger("x == 0", "1 - brk", {"n1": "true"}, (0, 0)))
    write("fig3c", "fig3c", 8, {}, SafetyCertificate(P("x == 0")))
    odd = " || ".join(f"y == {2 * n - 1}" for n in range(64))
    write("fig7", "fig7", 16, {}, danger(odd, "y + 2", {}, (101,)))


if __name__ == "__main__":
    main()
