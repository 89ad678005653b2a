import json
import subprocess
import sys

import pytest

from ndcbench.circuit import parse
from ndcbench.cli import EXIT_INVALID, EXIT_OK, EXIT_RESOURCE, EXIT_USAGE, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestUsage:
    def test_no_command(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == EXIT_USAGE

    def test_unknown_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["run", "--bogus"])
        assert exc.value.code == EXIT_USAGE

    def test_verify_needs_two_files(self, capsys, tmp_path):
        f = tmp_path / "a.txt"
        f.write_text("wires 1 clbits 0\n")
        code, _, err = run(capsys, "verify", str(f))
        assert code == EXIT_USAGE and "error" in err


class TestBuildAndVerify:
    def test_build_parses(self, capsys):
        code, out, _ = run(capsys, "build", "--method", "M", "--n", "5", "--theta", "pi/3", "--branch", "double")
        assert code == EXIT_OK
        assert out.startswith("# lnn M n=5 ")
        assert parse(out).n_wires >= 7

    def test_transpile_matches_generator(self, capsys, tmp_path):
        ref = tmp_path / "ref.txt"
        assert run(capsys, "build", "--layout", "reference", "--n", "4", "-o", str(ref))[0] == EXIT_OK
        lnn = tmp_path / "lnn.txt"
        code, _, _ = run(capsys, "transpile", "--input", str(ref), "-o", str(lnn))
        assert code == EXIT_OK
        code, out, _ = run(capsys, "verify", str(ref), str(lnn))
        assert code == EXIT_OK and out.startswith("EQUIVALENT")

    def test_family_verify(self, capsys):
        code, out, _ = run(capsys, "verify", "--method", "M", "--n", "6", "--settings", "3")
        assert code == EXIT_OK and "NOT" not in out

    def test_verify_detects_difference(self, capsys, tmp_path):
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        a.write_text("wires 1 clbits 1\nry 0 0.3\nmeas 0 0\n")
        b.write_text("wires 1 clbits 1\nry 0 0.4\nmeas 0 0\n")
        code, out, _ = run(capsys, "verify", str(a), str(b))
        assert code == EXIT_INVALID and "NOT EQUIVALENT" in out


class TestValidation:
    def test_bad_method(self, capsys):
        code, _, err = run(capsys, "build", "--method", "Q")
        assert code == EXIT_INVALID and err

    def test_bad_theta(self, capsys):
        assert run(capsys, "run", "--theta", "pi/")[0] == EXIT_INVALID

    def test_parse_error_reports_line(self, capsys, tmp_path):
        f = tmp_path / "bad.txt"
        f.write_text("wires 2 clbits 0\nfoo 1\n")
        code, _, err = run(capsys, "transpile", "--input", str(f))
        assert code == EXIT_INVALID and "2" in err

    def test_missing_file(self, capsys):
        assert run(capsys, "metric", "/nonexistent/results.csv")[0] == EXIT_INVALID

    def test_resource_ceiling(self, capsys):
        assert run(capsys, "build", "--n", "40")[0] == EXIT_RESOURCE


class TestPipeline:
    def test_run(self, capsys):
        code, out, _ = run(capsys, "run", "--n", "3", "--noise", "none", "--runs", "2", "--shots", "200")
        assert code == EXIT_OK and "ideal 0.25000" in out

    def test_sweep_metric_ingest(self, capsys, tmp_path):
        out_dir = tmp_path / "res"
        code, out, _ = run(capsys, "sweep", "--methods", "H", "--n-min", "2", "--n-max", "3", "--noise", "none",
                           "--runs", "3", "--shots", "200", "-o", str(out_dir))
        assert code == EXIT_OK and "N_NDC = 3" in out
        assert {p.name for p in out_dir.iterdir()} == {"results.csv", "metric.csv", "summary.txt", "config.yaml"}
        code, out, _ = run(capsys, "sweep", "--config", str(out_dir / "config.yaml"), "--dump-config")
        assert code == EXIT_OK and "n_max: 3" in out
        code, out, _ = run(capsys, "metric", str(out_dir / "results.csv"), "--compare", str(out_dir / "results.csv"))
        assert code == EXIT_OK and "= 1.00" in out

        counts = tmp_path / "c.json"
        counts.write_text(json.dumps({"metadata": {"method": "H", "n": 2, "theta": "pi/4"},
                                      "runs": [{"single": {"010": 3, "000": 1}, "double": {"010": 1, "000": 1}}]}))
        code, out, _ = run(capsys, "ingest", str(counts))
        assert code == EXIT_OK and out.splitlines()[1].startswith("H,2,")

    def test_sweep_resource_limited(self, capsys, tmp_path):
        code, out, _ = run(capsys, "sweep", "--methods", "H", "--n-min", "24", "--n-max", "25", "--noise", "none",
                           "--runs", "2", "--shots", "10", "-o", str(tmp_path / "r"))
        assert code == EXIT_RESOURCE and "skipped" in out


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "ndcbench", "build", "--n", "2"], capture_output=True, text=True)
    assert p.returncode == 0 and p.stdout.startswith("#")
