import json
import subprocess
import sys

import pytest

from permfix import __version__, cli, verify
from permfix.report import Report

SCAN_HEADER = "k,n,samples,estimate,stderr,normalized"


def run(capsys, *argv):
    try:
        code = cli.main(list(argv))
    except SystemExit as exc:  # argparse rejections
        code = exc.code
    out, err = capsys.readouterr()
    return code, out, err


def body(text: str) -> list[str]:
    return [ln for ln in text.splitlines() if not ln.startswith("#")]


class TestExact:
    def test_csv(self, capsys):
        code, out, _ = run(capsys, "exact", "--n", "4", "--k", "2")
        assert code == 0
        assert body(out) == ["n,k,numerator,denominator,decimal", "4,2,5,12,0.4166666666666667"]
        assert f"# permfix {__version__}" in out and "# seed=0" in out

    def test_json_strings(self, capsys):
        code, out, _ = run(capsys, "exact", "--n", "2", "--k", "1", "--format", "json")
        rec = json.loads(out)
        assert code == 0
        assert {"n", "k", "numerator", "denominator", "decimal", "meta"} == set(rec)
        assert rec["numerator"] == "1" and rec["denominator"] == "2"
        assert set(rec["meta"]) == {"version", "command", "seed", "params", "config"}

    def test_big_numerator_is_exact(self, capsys):
        _, out, _ = run(capsys, "exact", "--n", "40", "--k", "20", "--format", "json")
        rec = json.loads(out)
        assert int(rec["numerator"]) / int(rec["denominator"]) == pytest.approx(rec["decimal"])
        assert len(rec["denominator"]) > 17

    @pytest.mark.parametrize("argv,needle", [(("--n", "3", "--k", "2"), "n/2"),
                                             (("--n", "61", "--k", "2"), "estimate"),
                                             (("--n", "4", "--k", "0"), "positive")])
    def test_usage_errors(self, capsys, argv, needle):
        code, _, err = run(capsys, "exact", *argv)
        assert code == 2 and needle in err


class TestLimit:
    def test_dp(self, capsys):
        code, out, _ = run(capsys, "limit", "--k", "1")
        assert code == 0
        rows = body(out)
        assert rows[0] == "k,method,samples,estimate,stderr"
        assert rows[1].startswith("1,dp,,0.63212055882")

    def test_dp_k2(self, capsys):
        _, out, _ = run(capsys, "limit", "--k", "2", "--format", "json")
        assert json.loads(out)["rows"][0]["estimate"] == pytest.approx(0.5537396797, abs=1e-10)

    def test_dp_refused_beyond_envelope(self, capsys):
        code, _, err = run(capsys, "limit", "--k", "100", "--method", "dp")
        assert code == 2 and "--method mc" in err

    def test_mc(self, capsys):
        code, out, _ = run(capsys, "limit", "--k", "100", "--method", "mc", "--samples", "20000",
                           "--seed", "7")
        row = body(out)[1].split(",")
        assert code == 0 and row[:3] == ["100", "mc", "20000"] and float(row[4]) > 0
        assert "# seed=7" in out


class TestStreams:
    def test_scan_header_and_rows(self, capsys, tmp_path):
        out_file = tmp_path / "scan.csv"
        code, out, _ = run(capsys, "scan", "--k-min", "64", "--k-max", "1024", "--geometric", "2",
                           "--n-ratio", "2", "--samples", "2000", "--seed", "1",
                           "--output", str(out_file))
        assert code == 0 and out == ""
        lines = body(out_file.read_text())
        assert lines[0] == SCAN_HEADER and len(lines) == 6
        code, out, _ = run(capsys, "fit", "--input", str(out_file))
        assert code == 0 and body(out)[0] == "slope,stderr,n_points" and body(out)[1].endswith(",5")

    def test_el_and_fit_per_k(self, capsys, tmp_path):
        f = tmp_path / "el.csv"
        assert run(capsys, "el", "--k-min", "4", "--k-max", "64", "--samples", "2000",
                   "--output", str(f))[0] == 0
        lines = body(f.read_text())
        assert lines[0] == SCAN_HEADER and lines[1].split(",")[1] == "inf"
        code, out, _ = run(capsys, "fit", "--input", str(f))
        slope = float(body(out)[1].split(",")[0])
        assert code == 0 and -1 < slope < 1

    def test_el_exact(self, capsys):
        code, out, _ = run(capsys, "el", "--k", "1", "--method", "exact")
        lo, hi = map(float, body(out)[1].split(",")[1:])
        assert code == 0 and lo <= 2 <= hi
        assert run(capsys, "el", "--k", "9", "--method", "exact")[0] == 2

    def test_estimate(self, capsys):
        code, out, _ = run(capsys, "estimate", "--n", "4", "--k", "2", "--samples", "1000")
        assert code == 0 and body(out)[0] == SCAN_HEADER

    def test_json_scan_field_names(self, capsys):
        _, out, _ = run(capsys, "scan", "--k-min", "4", "--k-max", "8", "--samples", "500",
                        "--format", "json")
        rows = json.loads(out)["rows"]
        assert len(rows) == 2
        assert all(sorted(r) == sorted(SCAN_HEADER.split(",")) for r in rows)

    def test_byte_identical_reruns(self, capsys):
        argv = ("scan", "--k-min", "8", "--k-max", "32", "--samples", "3000", "--seed", "5")
        assert run(capsys, *argv)[1] == run(capsys, *argv)[1]

    def test_worker_count_changes_only_metadata(self, capsys):
        argv = ("estimate", "--n", "30", "--k", "10", "--samples", "5000")
        a = run(capsys, *argv, "--workers", "1")[1]
        b = run(capsys, *argv, "--workers", "4")[1]
        assert body(a) == body(b)

    def test_io_error(self, capsys, tmp_path):
        code, _, err = run(capsys, "fit", "--input", str(tmp_path / "missing.csv"))
        assert code == 3 and "I/O" in err
        code, _, _ = run(capsys, "exact", "--n", "4", "--k", "2",
                         "--output", str(tmp_path / "no" / "dir" / "x.csv"))
        assert code == 3

    def test_bad_fit_input(self, capsys, tmp_path):
        f = tmp_path / "bad.csv"
        f.write_text("a,b\n1,2\n")
        assert run(capsys, "fit", "--input", str(f))[0] == 2

    def test_scan_ratio_guard(self, capsys):
        assert run(capsys, "scan", "--k-min", "4", "--k-max", "8", "--n-ratio", "1")[0] == 2


class TestConfig:
    def test_config_file_echoed(self, capsys, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"seed": 42, "workers": 2}))
        _, out, _ = run(capsys, "estimate", "--n", "6", "--k", "3", "--samples", "100",
                        "--config", str(cfg))
        assert "# seed=42" in out and '"workers": 2' in out

    def test_flags_override_config(self, capsys, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"seed": 42}))
        _, out, _ = run(capsys, "estimate", "--n", "6", "--k", "3", "--samples", "100",
                        "--config", str(cfg), "--seed", "3")
        assert "# seed=3" in out

    def test_unknown_key(self, capsys, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"sed": 1}))
        assert run(capsys, "exact", "--n", "4", "--k", "2", "--config", str(cfg))[0] == 2

    def test_missing_config(self, capsys, tmp_path):
        assert run(capsys, "exact", "--n", "4", "--k", "2",
                   "--config", str(tmp_path / "nope.json"))[0] == 3


class TestVerify:
    @pytest.mark.parametrize("suite,extra", [("sieve", ["--n-max", "40"]), ("oracle", []),
                                             ("cauchy", []), ("cyclelemma", []), ("sumd", []),
                                             ("sieve2", ["--sieve2-n-max", "9"]),
                                             ("moments", ["--samples", "20000"])])
    def test_suites_pass(self, capsys, suite, extra):
        code, out, _ = run(capsys, "verify", "--suite", suite, *extra)
        assert code == 0, out
        assert all(ln.startswith("PASS") for ln in body(out) if ln.strip())

    def test_failure_exit_code(self, capsys, monkeypatch):
        def broken(**_):
            rep = Report("broken")
            rep.add("deliberately false", False, "instance x=1")
            return rep

        monkeypatch.setattr(verify, "suite_sieve", broken)
        code, out, _ = run(capsys, "verify", "--suite", "sieve")
        assert code == 1 and "FAIL" in out and "instance x=1" in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "permfix", "exact", "--n", "3", "--k", "1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.splitlines()[-1] == "3,1,2,3,0.6666666666666666"
    proc = subprocess.run([sys.executable, "-m", "permfix", "frobnicate"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 2
