import csv
import io
import json
import subprocess
import sys

import pytest

from tusnady.cli import RunConfig, UsageError, main
from tusnady.conjecture import delta
from tusnady.numerics import to_fraction


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def csv_rows(text):
    body = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(body))))


def summary(text):
    line = next(l for l in text.splitlines() if l.startswith("# summary: "))
    return dict(kv.split("=", 1) for kv in line[len("# summary: "):].split(","))


class TestVerify:
    def test_small_run_holds(self, capsys):
        code, out, err = run(capsys, "verify", "--m-max", "2")
        assert code == 0
        rows = csv_rows(out)
        assert len(rows) == 1
        assert rows[0]["weak"] == "holds" and rows[0]["sharp"] == "holds"
        assert rows[0]["delta"].startswith("0.64683797")
        assert summary(out)["exit_code"] == "0"
        assert "1 checks" in err

    def test_odd_m_max_is_usage_error(self, capsys):
        code, out, err = run(capsys, "verify", "--m-max", "3")
        assert code == 3 and out == "" and "even" in err

    def test_injected_bound_gives_violation(self, capsys):
        code, out, _ = run(capsys, "verify", "--m-max", "10", "--delta-upper", "1.0359")
        assert code == 1
        failing = [r for r in csv_rows(out) if r["sharp"] == "fails"]
        assert [(r["m"], r["k"]) for r in failing] == [("10", "10")]

    def test_undecidable_exit_code(self, capsys):
        # a bound sitting exactly on the 128-bit value of Delta(10,10) cannot be separated
        centre = to_fraction(delta(10, 10, 128).delta)
        code, out, _ = run(capsys, "verify", "--m-max", "10", "--k", "10", "--max-precision", "128",
                           "--delta-upper", str(centre))
        assert code == 2
        assert csv_rows(out)[0]["sharp"] == "undecidable"

    def test_single_k_and_json(self, capsys):
        code, out, _ = run(capsys, "verify", "--m-max", "12", "--k", "6", "--format", "json")
        doc = json.loads(out)
        assert code == 0
        assert [(r["m"], r["k"]) for r in doc["records"]] == [("6", "6"), ("8", "6"), ("10", "6")]
        assert doc["summary"]["checks"] == "3"


class TestSweep:
    def test_argmax_summary(self, capsys):
        code, out, _ = run(capsys, "sweep", "--m-max", "10")
        assert code == 0
        s = summary(out)
        assert (s["argmax_m"], s["argmax_k"]) == ("10", "10")
        rows = csv_rows(out)
        assert list(rows[0]) == ["m", "k", "p_log2", "y", "b", "delta", "band"]
        last = rows[-1]
        assert (last["m"], last["k"], last["p_log2"]) == ("10", "10", "-10")

    def test_json(self, capsys):
        code, out, _ = run(capsys, "sweep", "--m-max", "2", "--format", "json")
        doc = json.loads(out)
        assert code == 0 and len(doc["records"]) == 1
        assert set(doc["records"][0]) == {"m", "k", "p_log2", "y", "b", "delta", "band"}
        assert doc["summary"]["argmax_m"] == "2"

    def test_digits_follow_precision(self, capsys):
        _, out, _ = run(capsys, "sweep", "--m-max", "2", "--precision", "64")
        assert len(csv_rows(out)[0]["delta"].replace("0.", "", 1)) == 20
        _, out, _ = run(capsys, "sweep", "--m-max", "2", "--precision", "256")
        assert len(csv_rows(out)[0]["delta"].replace("0.", "", 1)) == 78

    def test_non_dyadic_log2(self, capsys):
        _, out, _ = run(capsys, "sweep", "--m-max", "4")
        row = [r for r in csv_rows(out) if r["k"] == "3"][0]
        assert float(row["p_log2"]) == pytest.approx(-1.678071905, abs=1e-9)

    def test_output_file(self, capsys, tmp_path):
        target = tmp_path / "out.csv"
        code, out, _ = run(capsys, "sweep", "--m-max", "4", "--output", str(target))
        assert code == 0 and out == ""
        assert target.read_text().startswith("m,k,p_log2")


class TestFigure:
    def test_figure1_m50(self, capsys):
        code, out, _ = run(capsys, "figure", "1", "--m", "50")
        rows = csv_rows(out)
        count = lambda name: sum(r["series"] == name for r in rows)
        assert code == 0
        assert count("step") == 25 and count("delta") == 25 and count("limit") == 1001

    def test_figure1_m2_delta_point(self, capsys):
        _, out, _ = run(capsys, "figure", "1", "--m", "2", "--grid-step", "1/4")
        point = [r for r in csv_rows(out) if r["series"] == "delta"][0]
        assert float(point["eta"]) == pytest.approx(0.47694, abs=1e-5)
        assert float(point["xi"]) == pytest.approx(0.6469, abs=1e-4)

    def test_figure2_curves(self, capsys):
        _, out, _ = run(capsys, "figure", "2", "--m-max", "4")
        rows = csv_rows(out)
        assert sorted({r["m"] for r in rows}) == ["2", "4"]
        assert {r["band"] for r in rows} == {"0<m <= 200"}

    def test_figure_needs_even(self, capsys):
        assert run(capsys, "figure", "1", "--m", "5")[0] == 3
        assert run(capsys, "figure", "2")[0] == 3


class TestChernoff:
    def test_rademacher(self, capsys):
        code, out, _ = run(capsys, "chernoff", "--dist", "rademacher", "--x", "0.5")
        row = csv_rows(out)[0]
        assert code == 0
        assert list(row) == ["x", "alpha", "rho", "log_rho", "y_coupled"]
        assert float(row["y_coupled"]) == pytest.approx(0.5114920, abs=1e-7)

    def test_normal(self, capsys):
        _, out, _ = run(capsys, "chernoff", "--dist", "normal", "--x", "1.3")
        assert csv_rows(out)[0]["y_coupled"] == "1.3"

    @pytest.mark.parametrize("argv", [["--dist", "rademacher", "--x", "1.5"],
                                      ["--dist", "cauchy", "--x", "1"],
                                      ["--dist", "rademacher", "--x", "abc"],
                                      ["--dist", "rademacher", "--x", "-0.5"]])
    def test_usage_errors(self, capsys, argv):
        code, out, err = run(capsys, "chernoff", *argv)
        assert code == 3 and out == ""
        assert argv[1] in err or argv[3] in err


class TestPsi:
    def test_examples(self, capsys):
        _, out, _ = run(capsys, "psi", "--m", "1", "--y", "0")
        row = csv_rows(out)[0]
        assert row["psi"] == "1" and float(row["classical_margin"]) == 0
        _, out, _ = run(capsys, "psi", "--m", "4", "--y", "0")
        row = csv_rows(out)[0]
        assert row["psi"] == "0" and float(row["sharp_margin"]) == pytest.approx(1.1036)
        _, out, err = run(capsys, "psi", "--m", "2", "--y", "100")
        row = csv_rows(out)[0]
        assert row["psi"] == "2" and row["saturated"] == "true"
        assert "saturates" in err

    def test_default_grid(self, capsys):
        code, out, _ = run(capsys, "psi", "--m", "4", "--grid-step", "1/2")
        rows = csv_rows(out)
        assert code == 0 and len(rows) == 25 + 8
        assert all(float(r["classical_margin"]) >= 0 for r in rows)

    def test_bad_m(self, capsys):
        assert run(capsys, "psi", "--m", "0", "--y", "1")[0] == 3


class TestUsage:
    def test_argparse_errors_exit_3(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["verify"])
        assert exc.value.code == 3
        with pytest.raises(SystemExit) as exc:
            main(["bogus"])
        assert exc.value.code == 3

    def test_precision_ordering(self, capsys):
        assert run(capsys, "sweep", "--m-max", "2", "--precision", "256",
                   "--max-precision", "128")[0] == 3
        assert run(capsys, "sweep", "--m-max", "2", "--jobs", "0")[0] == 3

    def test_run_config_invariants(self):
        with pytest.raises(UsageError):
            RunConfig(precision=32)
        assert RunConfig().precision == 128 and RunConfig().max_precision == 4096

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "tusnady", "sweep", "--m-max", "2"],
                              capture_output=True, text=True, check=False)
        assert proc.returncode == 0
        assert proc.stdout.splitlines()[0] == "m,k,p_log2,y,b,delta,band"

    def test_byte_identical_across_jobs(self, capsys):
        _, serial, _ = run(capsys, "sweep", "--m-max", "30", "--jobs", "1")
        _, parallel, _ = run(capsys, "sweep", "--m-max", "30", "--jobs", "4")
        assert serial == parallel
