"""Cost of bounded unwinding versus certificate checking as bugs get deeper.

For each loop bound the deep-bug program is scaled to that bound; we time
``unwind`` until it reaches the failing exit and time ``check_danger`` on
the matching reference certificate.  Each measurement is the median over
``repeats`` runs.
"""

from __future__ import annotations

import csv
import statistics
import time
from dataclasses import dataclass
from pathlib import Path

from . import corpus
from .bmc import Counterexample, unwind
from .certificate import check_danger

DEFAULT_BOUNDS = (16, 64, 120)


@dataclass(frozen=True)
class TrendRow:
    bound: int
    bmc_seconds: float
    bmc_depth: int | None
    check_seconds: float
    check_ok: bool


def _median_time(fn, repeats: int):
    times, out = [], None
    for _ in range(repeats):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return statistics.median(times), out


def measure(bounds=DEFAULT_BOUNDS, program: str = "fig4a", width: int = 8,
            repeats: int = 5, wrap_safe: bool = True) -> list[TrendRow]:
    rows = []
    for b in bounds:
        L = corpus.program(program, width, {corpus.BIG: b})
        cert = corpus.fig4_golden(program, b, wrap_safe=wrap_safe)
        check_danger(L, cert)  # warm the compiled-expression caches
        t_bmc, res = _median_time(lambda: unwind(L, b + 1), repeats)
        t_chk, v = _median_time(lambda: check_danger(L, cert), repeats)
        depth = res.depth if isinstance(res, Counterexample) else None
        rows.append(TrendRow(b, t_bmc, depth, t_chk, v.ok))
    return rows


def write_csv(rows: list[TrendRow], path: Path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["bound", "bmc_seconds", "bmc_depth", "check_seconds", "check_ok"])
        for r in rows:
            w.writerow([r.bound, f"{r.bmc_seconds:.6f}", "" if r.bmc_depth is None else r.bmc_depth,
                        f"{r.check_seconds:.6f}", int(r.check_ok)])


def plot(rows: list[TrendRow], path: Path, title: str = "fig4a") -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    bounds = [r.bound for r in rows]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(bounds, [r.bmc_seconds for r in rows], "o-", label="unwind to the bug")
    ax.plot(bounds, [r.check_seconds for r in rows], "s--", label="check certificate")
    ax.set_xlabel("loop bound")
    ax.set_ylabel("seconds (median)")
    ax.set_yscale("log")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def trend(out_dir: str | Path, bounds=DEFAULT_BOUNDS, program: str = "fig4a", width: int = 8,
          repeats: int = 5) -> tuple[list[TrendRow], Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = measure(bounds, program, width, repeats)
    csv_path, png_path = out / f"trend-{program}.csv", out / f"trend-{program}.png"
    write_csv(rows, csv_path)
    plot(rows, png_path, f"{program}, width {width}")
    return rows, csv_path, png_path
