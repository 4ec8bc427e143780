"""Command-line interface.

Exit codes: 10 danger proved, 20 safety proved, 30 unknown or alarm,
1 usage or parse error, 2 internal error, exhausted budget or a
certificate that fails validation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import corpus
from . import semantics as sem
from .certificate import (CertificateFile, DangerCertificate, bind, check, dumps, extract_trace,
                          loads, program_digest)
from .errors import (BudgetExceeded, CertificateFormatError, CertificateInvalid, DangerInvError,
                     ParseError, UnsupportedFeature, WidthError)
from .loop import LoopSystem, load
from .result import DangerProved, SafetyProved

EXIT_DANGER, EXIT_SAFE, EXIT_UNKNOWN = 10, 20, 30
EXIT_USAGE, EXIT_INTERNAL = 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ------------------------------------------------------------ arguments

def parse_subst_args(items) -> dict[int, int]:
    out: dict[int, int] = {}
    for item in items or ():
        for part in item.split(","):
            part = part.strip()
            if not part:
                continue
            a, sep, b = part.partition("=")
            try:
                if not sep:
                    raise ValueError
                out[int(a)] = int(b)
            except ValueError:
                raise UsageError(f"--subst expects OLD=NEW, got {part!r}") from None
    return out


def parse_range(text: str | None):
    if text is None:
        return None
    for sep in (":", ","):
        if sep in text[1:]:
            i = text.index(sep, 1)
            try:
                lo, hi = int(text[:i]), int(text[i + 1:])
            except ValueError:
                break
            if lo > hi:
                raise UsageError("--const-range needs LO <= HI")
            return lo, hi
    raise UsageError(f"--const-range expects LO:HI, got {text!r}")


def read_program(path: str) -> tuple[str, str]:
    """Source text and display name; unknown paths fall back to the corpus by stem."""
    p = Path(path)
    if p.exists():
        return p.read_text(), p.stem
    if p.stem in corpus.PROGRAMS and p.suffix in ("", ".loop"):
        return corpus.program_text(p.stem), p.stem
    raise UsageError(f"cannot read {path}")


def read_certificate(path: str) -> tuple[str, str]:
    p = Path(path)
    if p.exists():
        return p.read_text(), p.stem
    if p.suffix in ("", ".cert") and p.stem in corpus.certificate_names():
        return corpus.certificate_text(p.stem), p.stem
    raise UsageError(f"cannot read {path}")


def load_args(args, width: int | None = None, subst=None) -> tuple[LoopSystem, str]:
    text, name = read_program(args.loop)
    if width is None:
        width = args.bits
    if subst is None:
        subst = parse_subst_args(args.subst)
    return load(text, width, subst, name), text


# --------------------------------------------------------------- output

def _trace_rows(L: LoopSystem, trace) -> list[dict]:
    return [dict(zip(L.vars, s)) for s in trace.states]


def _print_trace(L: LoopSystem, trace, out) -> None:
    print(f"trace ({len(trace)} states, final state violates the assertion):", file=out)
    for i, s in enumerate(trace.states):
        print(f"  {i}: {sem.format_state(L, s)}", file=out)


def _cert_file(L: LoopSystem, text: str, cert, subst) -> CertificateFile:
    return CertificateFile(cert, program_digest(text), L.width, tuple(sorted(subst.items())), L.vars)


def _emit(args, payload: dict, text_lines: list[str]) -> None:
    if args.format == "json":
        print(json.dumps(payload, sort_keys=True))
    else:
        print("\n".join(text_lines))


def _write_cert(args, cf: CertificateFile) -> None:
    if getattr(args, "cert_out", None):
        Path(args.cert_out).write_text(dumps(cf))


# ------------------------------------------------------------- commands

def cmd_solve(args) -> int:
    from .synth import Budget, cegis, for_loop
    L, text = load_args(args)
    subst = parse_subst_args(args.subst)
    g = for_loop(L, max_size=args.max_size, const_range=parse_range(args.const_range))
    budget = Budget(max_iterations=args.max_iterations, timeout=args.timeout, seed=args.seed,
                    strategy=args.strategy, jobs=args.jobs)
    r = cegis(L, g, args.mode, budget)
    stats = {"iterations": r.iterations, "seconds": round(r.stats.get("seconds", 0.0), 3)}
    if isinstance(r, (DangerProved, SafetyProved)):
        cf = _cert_file(L, text, r.cert, subst)
        cert_text = dumps(cf)
        _write_cert(args, cf)
        payload = {"result": r.kind, "certificate": cert_text, **stats}
        lines = [f"result: {r.kind}", cert_text.rstrip()]
        if isinstance(r, DangerProved):
            payload["trace"] = _trace_rows(L, r.trace)
        _emit(args, payload, lines)
        if isinstance(r, DangerProved) and args.format != "json":
            _print_trace(L, r.trace, sys.stdout)
        if args.format != "json":
            print(f"iterations: {r.iterations}  seconds: {stats['seconds']}")
        return EXIT_DANGER if isinstance(r, DangerProved) else EXIT_SAFE
    _emit(args, {"result": "unknown", "reason": r.reason, **stats},
          [f"result: unknown ({r.reason})", f"iterations: {r.iterations}  seconds: {stats['seconds']}"])
    return EXIT_UNKNOWN


def _load_for_cert(args) -> tuple[LoopSystem, str, CertificateFile]:
    cert_text, _ = read_certificate(args.cert)
    cf = loads(cert_text)
    subst = parse_subst_args(args.subst) if args.subst else cf.subst_map
    width = args.bits if args.bits is not None else cf.width
    L, text = load_args(args, width, subst)
    if program_digest(text) != cf.digest:
        raise CertificateInvalid("certificate was written for a different program (digest mismatch)")
    bind(cf, L)
    return L, text, cf


def cmd_check(args) -> int:
    L, _, cf = _load_for_cert(args)
    v = check(L, cf.cert, jobs=args.jobs)
    c = cf.cert
    label = "danger" if isinstance(c, DangerCertificate) else c.mode
    payload = {"certificate": label, "ok": v.ok, "criterion": v.criterion,
               "witness": [dict(zip(L.vars, s)) for s in v.witness_states()]}
    _emit(args, payload, [f"{label} certificate: " + ("valid" if v.ok else v.describe(L))])
    if not v.ok:
        return EXIT_INTERNAL
    if isinstance(c, DangerCertificate):
        return EXIT_DANGER
    return EXIT_SAFE if c.mode == "safety" else 0


def cmd_trace(args) -> int:
    L, _, cf = _load_for_cert(args)
    if not isinstance(cf.cert, DangerCertificate):
        raise UsageError("trace needs a danger certificate")
    v = check(L, cf.cert, jobs=args.jobs)
    if not v.ok:
        _emit(args, {"ok": False, "criterion": v.criterion},
              [f"danger certificate: {v.describe(L)}"])
        return EXIT_INTERNAL
    trace = extract_trace(L, cf.cert)
    if args.format == "json":
        print(json.dumps({"ok": True, "trace": _trace_rows(L, trace)}, sort_keys=True))
    else:
        _print_trace(L, trace, sys.stdout)
    return EXIT_DANGER


def cmd_bmc(args) -> int:
    from .bmc import Counterexample, cex_to_danger, unwind
    L, text = load_args(args)
    r = unwind(L, args.depth)
    if not isinstance(r, Counterexample):
        _emit(args, {"result": "none-within-bound", "depth": args.depth},
              [f"no counterexample within {args.depth} iterations"])
        return EXIT_UNKNOWN
    cert = cex_to_danger(L, r)
    v = check(L, cert, jobs=args.jobs)
    if not v.ok:
        raise CertificateInvalid(f"dual certificate rejected: {v.describe(L)}")
    cf = _cert_file(L, text, cert, parse_subst_args(args.subst))
    _write_cert(args, cf)
    if args.format == "json":
        print(json.dumps({"result": "danger", "depth": r.depth, "trace": _trace_rows(L, r.trace),
                          "certificate": dumps(cf)}, sort_keys=True))
    else:
        print(f"counterexample of depth {r.depth}")
        _print_trace(L, r.trace, sys.stdout)
        if args.show_cert:
            print(dumps(cf).rstrip())
    return EXIT_DANGER


def cmd_absint(args) -> int:
    from .absint import Alarm, analyze, classify_alarm
    L, _ = load_args(args)
    ann = analyze(L, widen_after=args.widen_after, max_iterations=args.max_iterations)
    verdict = classify_alarm(ann, L)
    alarm = isinstance(verdict, Alarm)
    if args.format == "json":
        data = json.loads(ann.to_json())
        data["verdict"] = "alarm" if alarm else "safe"
        print(json.dumps(data, sort_keys=True))
    else:
        only = tuple(v for v in L.vars if v in L.source_vars) if not args.all_vars else None
        print(ann.to_text(only))
        print(str(verdict) if alarm else "safe: no loop-exit state can violate the assertion")
    return EXIT_UNKNOWN if alarm else EXIT_SAFE


def cmd_oracle(args) -> int:
    from .oracle import doom_analysis, table_search
    L, text = load_args(args)
    r = table_search(L)
    if args.doom:
        rep = doom_analysis(L)
        modes = ("doomed-head", "doomed-state", "partial-danger", "danger")
        found = {m: rep.exists(m) for m in modes}
        if args.format == "json":
            print(json.dumps({"result": r.kind, "proofs": found}, sort_keys=True))
        else:
            print(f"result: {r.kind}")
            for m in modes:
                print(f"  {m}: {'exists' if found[m] else 'none'}")
    else:
        cf = _cert_file(L, text, r.cert, parse_subst_args(args.subst))
        _write_cert(args, cf)
        payload = {"result": r.kind, "certificate": dumps(cf)}
        lines = [f"result: {r.kind}"]
        if isinstance(r, DangerProved):
            payload["trace"] = _trace_rows(L, r.trace)
        _emit(args, payload, lines)
        if isinstance(r, DangerProved) and args.format != "json":
            _print_trace(L, r.trace, sys.stdout)
    return EXIT_DANGER if isinstance(r, DangerProved) else EXIT_SAFE


def cmd_trend(args) -> int:
    from .report import trend
    try:
        bounds = tuple(int(b) for b in args.bounds.split(","))
    except ValueError:
        raise UsageError(f"--bounds expects a comma-separated list, got {args.bounds!r}") from None
    rows, csv_path, png_path = trend(args.out, bounds, args.program, args.bits, args.repeats)
    for r in rows:
        print(f"bound {r.bound:4d}  unwind {r.bmc_seconds:.6f}s  check {r.check_seconds:.6f}s")
    print(f"wrote {csv_path} and {png_path}")
    return 0


def cmd_generate(args) -> int:
    from .generate import random_programs
    progs = random_programs(args.count, args.seed, args.vars, args.bits)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for i, p in enumerate(progs):
            (out / f"random{i:03d}.loop").write_text(p)
        print(f"wrote {len(progs)} programs to {out}")
    else:
        print("\n".join(progs))
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dangerinv", description="Find or refute bugs in single-loop programs.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, bits_default=8):
        sp.add_argument("--bits", type=int, default=bits_default, help="integer width (default 8)")
        sp.add_argument("--subst", action="append", metavar="OLD=NEW",
                        help="rewrite a program literal before loading; repeatable")
        sp.add_argument("--format", choices=("text", "json"), default="text")
        sp.add_argument("--jobs", type=int, default=1, help="worker threads for exhaustive checks")

    sp = sub.add_parser("solve", help="synthesise a danger or safety certificate")
    sp.add_argument("loop")
    common(sp)
    sp.add_argument("--mode", choices=("gs", "danger", "safety"), default="gs")
    sp.add_argument("--timeout", type=float, default=120.0, help="wall-clock seconds")
    sp.add_argument("--max-iterations", type=int, default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--strategy", choices=("enum", "stochastic"), default="enum")
    sp.add_argument("--max-size", type=int, default=7, help="node bound per component")
    sp.add_argument("--const-range", metavar="LO:HI", help="extra constants for the grammar")
    sp.add_argument("--cert-out", metavar="PATH")
    sp.set_defaults(fn=cmd_solve)

    for name, fn, help_ in (("check", cmd_check, "validate a certificate"),
                            ("trace", cmd_trace, "print the error trace of a danger certificate")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("cert")
        sp.add_argument("loop")
        common(sp, bits_default=None)
        sp.set_defaults(fn=fn)

    sp = sub.add_parser("bmc", help="bounded breadth-first search for a failing run")
    sp.add_argument("loop")
    common(sp)
    sp.add_argument("--depth", "-k", type=int, default=100)
    sp.add_argument("--cert-out", metavar="PATH")
    sp.add_argument("--show-cert", action="store_true")
    sp.set_defaults(fn=cmd_bmc)

    sp = sub.add_parser("absint", help="interval analysis")
    sp.add_argument("loop")
    common(sp)
    sp.add_argument("--widen-after", type=int, default=None)
    sp.add_argument("--max-iterations", type=int, default=4096)
    sp.add_argument("--all-vars", action="store_true", help="include desugaring variables")
    sp.set_defaults(fn=cmd_absint)

    sp = sub.add_parser("oracle", help="exact decision by explicit state tables")
    sp.add_argument("loop")
    common(sp)
    sp.add_argument("--doom", action="store_true", help="report which proof flavours exist")
    sp.add_argument("--cert-out", metavar="PATH")
    sp.set_defaults(fn=cmd_oracle)

    sp = sub.add_parser("trend", help="time unwinding against checking across loop bounds")
    sp.add_argument("--bounds", default="16,64,120")
    sp.add_argument("--program", choices=("fig4a", "fig4b", "fig4c"), default="fig4a")
    sp.add_argument("--bits", type=int, default=8)
    sp.add_argument("--repeats", type=int, default=5)
    sp.add_argument("--out", default="trend-out")
    sp.set_defaults(fn=cmd_trend)

    sp = sub.add_parser("generate", help="print random small programs")
    sp.add_argument("--count", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--vars", type=int, default=2)
    sp.add_argument("--bits", type=int, default=3)
    sp.add_argument("--out", metavar="DIR")
    sp.set_defaults(fn=cmd_generate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (UsageError, ParseError, UnsupportedFeature, WidthError, CertificateFormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (BudgetExceeded, CertificateInvalid) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    except DangerInvError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
