from __future__ import annotations

import json
import subprocess
import sys

import pytest

from dangerinv import corpus
from dangerinv.certificate import loads
from dangerinv.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_solve_fig4a(capsys, tmp_path):
    cert = tmp_path / "fig4a.cert"
    code, out, _ = run(capsys, "solve", corpus.path_of("fig4a"), "--subst", "1000000=16",
                       "--bits", "8", "--cert-out", str(cert))
    assert code == 10
    assert "kind danger" in out and "trace (17 states" in out
    code, out, _ = run(capsys, "check", str(cert), corpus.path_of("fig4a"))
    assert code == 10 and "valid" in out


def test_solve_fig3c(capsys):
    code, out, _ = run(capsys, "solve", "examples/fig3c.loop")
    assert code == 20 and "kind safety" in out


def test_json_output_round_trips(capsys):
    code, out, _ = run(capsys, "solve", "fig3b", "--format", "json")
    assert code == 10
    data = json.loads(out)
    cf = loads(data["certificate"])
    assert cf.kind == "danger" and data["trace"][0] == {"x": 0, "brk": 0}


def test_corrupted_ranking(capsys, tmp_path):
    text = corpus.certificate_text("fig4a")
    bad = tmp_path / "fig4a.cert"
    bad.write_text("\n".join("R 1" if l.startswith("R ") else l for l in text.splitlines()) + "\n")
    code, out, _ = run(capsys, "check", str(bad), "examples/fig4a.loop")
    assert code == 2 and "rank-decrease" in out


def test_shipped_golden_fig4c(capsys):
    code, out, _ = run(capsys, "check", "fig4c.cert", "fig4c")
    assert code == 10


def test_digest_mismatch(capsys):
    code, _, err = run(capsys, "check", "fig4c.cert", "fig4a")
    assert code == 2 and "different program" in err


def test_trace_command(capsys):
    code, out, _ = run(capsys, "trace", "fig7.cert", "fig7", "--format", "json")
    assert code == 10
    ys = [s["y"] for s in json.loads(out)["trace"]]
    assert ys[0] == 101 and ys[-1] == -1


def test_bmc_command(capsys, tmp_path):
    code, out, _ = run(capsys, "bmc", "fig7", "--bits", "16", "--depth", "60",
                       "--cert-out", str(tmp_path / "dual.cert"))
    assert code == 10 and "depth 51" in out
    code, _, _ = run(capsys, "check", str(tmp_path / "dual.cert"), "fig7")
    assert code == 10
    code, out, _ = run(capsys, "bmc", "fig7", "--bits", "16", "--depth", "10")
    assert code == 30


def test_absint_command(capsys):
    code, out, _ = run(capsys, "absint", "fig7", "--bits", "16")
    assert code == 30 and "loop-exit: y=[-1,0]" in out
    code, out, _ = run(capsys, "absint", "fig3c", "--format", "json")
    assert code == 20 and json.loads(out)["verdict"] == "safe"


def test_oracle_command(capsys):
    code, out, _ = run(capsys, "oracle", "fig3a", "--bits", "4", "--subst", "10=5", "--doom")
    assert code == 10 and "doomed-head: none" in out and "doomed-state: exists" in out
    code, _, _ = run(capsys, "oracle", "fig3c", "--bits", "4", "--subst", "10=5")
    assert code == 20


def test_subst_comma_separated(capsys):
    code, _, _ = run(capsys, "oracle", "fig3c", "--bits", "4", "--subst", "10=5,3=3")
    assert code == 20


@pytest.mark.parametrize("argv", [
    ("solve", "missing.loop"),
    ("solve", "fig4a"),
    ("solve", "fig4a", "--subst", "oops"),
    ("solve", "fig4a", "--subst", "1000000=16", "--const-range", "9:1"),
])
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 1 and err.startswith("error:")


def test_argparse_exit_code_is_one():
    for argv in (["nonsense"], ["bmc", "fig7", "--depth", "many"]):
        with pytest.raises(SystemExit) as ei:
            main(argv)
        assert ei.value.code == 1


def test_parse_error_exit(capsys, tmp_path):
    p = tmp_path / "bad.loop"
    p.write_text("while x < 1 {")
    code, _, err = run(capsys, "solve", str(p))
    assert code == 1 and "expected" in err


def test_budget_exit(capsys):
    code, _, err = run(capsys, "solve", "fig4e")
    assert code == 2 and "budget" in err


def test_unknown_exit(capsys):
    code, out, _ = run(capsys, "solve", "fig4d", "--subst", "1000000=100", "--timeout", "0.05")
    assert code == 30 and "timeout" in out


def test_trend_command(capsys, tmp_path):
    code, out, _ = run(capsys, "trend", "--out", str(tmp_path), "--repeats", "1")
    assert code == 0
    assert (tmp_path / "trend-fig4a.csv").exists() and (tmp_path / "trend-fig4a.png").exists()


def test_console_script():
    r = subprocess.run([sys.executable, "-m", "dangerinv.cli", "absint", "fig7", "--bits", "16"],
                       capture_output=True, text=True)
    assert r.returncode == 30 and "body-exit: y=[-1,198]" in r.stdout
