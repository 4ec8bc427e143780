from __future__ import annotations

import csv

from dangerinv.report import measure, trend


def test_measure_rows():
    rows = measure((8, 16), repeats=1)
    assert [r.bound for r in rows] == [8, 16]
    assert [r.bmc_depth for r in rows] == [8, 16]
    assert all(r.check_ok for r in rows)


def test_trend_files(tmp_path):
    rows, csv_path, png_path = trend(tmp_path, (8, 16), repeats=1)
    with open(csv_path) as f:
        table = list(csv.DictReader(f))
    assert [int(r["bound"]) for r in table] == [8, 16]
    assert png_path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
