# tests/UnitTests/cli_unit_test.py
"""
Unit tests for the ersa-lab command line: CSV output, provenance, config files and exit codes.
"""

import io
import json

import numpy as np
import pytest

from ersa_lab.cli import build_parser, format_value, parse_args, run, write_csv


def write_and_table(tmp_path):
    path = tmp_path / "and.txt"
    path.write_text("1 2\n0\n0\n0\n1\n", encoding="utf-8")
    return path


def csv_body(text: str):
    """(provenance dict, header, data rows) of an ersa-lab CSV."""
    lines = text.splitlines()
    prov = dict(line[2:].split("=", 1) for line in lines if line.startswith("# "))
    body = [line for line in lines if not line.startswith("# ")]
    return prov, body[0], body[1:]


# ═══════════════════════════════════════════════════════════════════════════
# 1.  Formatting
# ═══════════════════════════════════════════════════════════════════════════

class TestFormatting:

    @pytest.mark.parametrize("value, digits, expected", [
        (True, 12, "true"),
        (np.bool_(False), 12, "false"),
        (0.1, 12, "0.1"),
        (np.float64(1.0 / 3.0), 3, "0.333"),
        (7, 3, "7"),
        ("(0,1)'", 3, "(0,1)'"),
    ])
    def test_format_value(self, value, digits, expected):
        assert format_value(value, digits) == expected

    def test_write_csv(self):
        out = io.StringIO()
        write_csv(out, {"seed": 1, "command": "x"}, ["a", "b"], [[1, "2,3"], [0.5, True]], 12)
        assert out.getvalue() == '# command=x\n# seed=1\na,b\n1,"2,3"\n0.5,true\n'


# ═══════════════════════════════════════════════════════════════════════════
# 2.  Parsing and config files
# ═══════════════════════════════════════════════════════════════════════════

class TestParsing:

    def test_bisect_defaults(self):
        args = build_parser().parse_args(["bisect", "--p", "0.5"])
        assert args.rho == 1.0
        assert args.n == 16
        assert args.lam is None
        assert build_parser().parse_args(["trace-surface"]).rho == 1.0

    def test_config_fills_defaults_only(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"trials": 30, "n": 3, "workers": 2}), encoding="utf-8")
        args, cfg_values = parse_args(["estimate-h", "--config", str(path), "--n", "5"])
        assert args.trials == 30
        assert args.n == 5
        assert cfg_values == {"workers": 2}

    def test_config_unknown_key(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"bogus": 1}), encoding="utf-8")
        with pytest.raises(ValueError, match="bogus"):
            parse_args(["estimate-h", "--config", str(path)])


# ═══════════════════════════════════════════════════════════════════════════
# 3.  run() end to end
# ═══════════════════════════════════════════════════════════════════════════

class TestRun:

    def test_fourier(self, tmp_path):
        out = tmp_path / "fourier.csv"
        code = run(["fourier", "--table", str(write_and_table(tmp_path)), "--out", str(out), "--seed", "1"])
        assert code == 0
        prov, header, rows = csv_body(out.read_text(encoding="utf-8"))
        assert prov["command"] == "fourier"
        assert prov["seed"] == "1"
        assert "workers" not in prov and "cfg.workers" not in prov
        assert header == "quantity,index,value"
        assert rows[:4] == ["probability,,0.25", "total_influence,,1", "influence,1,0.5", "influence,2,0.5"]
        assert rows[4:] == ["spectral_weight,0,0.0625", "spectral_weight,1,0.125", "spectral_weight,2,0.0625"]

    def test_stdout_and_stderr(self, tmp_path, capsys):
        assert run(["fourier", "--table", str(write_and_table(tmp_path))]) == 0
        captured = capsys.readouterr()
        assert "quantity,index,value" in captured.out
        resolved = json.loads(next(line for line in captured.err.splitlines() if line.startswith("{")))
        assert resolved["command"] == "fourier"
        assert resolved["config"]["confidence"] == 0.95

    def test_worker_count_leaves_bytes_unchanged(self, tmp_path):
        one, two = tmp_path / "one.csv", tmp_path / "two.csv"
        chunks = tmp_path / "chunks.json"
        chunks.write_text(json.dumps({"chunk_size": 10}), encoding="utf-8")
        base = ["estimate-h", "--n", "1", "--trials", "100", "--seed", "3", "--buffer", "1", "--config", str(chunks)]
        assert run(base + ["--workers", "1", "--out", str(one)]) == 0
        assert run(base + ["--workers", "2", "--out", str(two)]) == 0
        assert one.read_bytes() == two.read_bytes()

    def test_bisect_needs_one_parameter(self):
        assert run(["bisect", "--n", "2", "--trials", "10"]) == 2
        assert run(["bisect", "--n", "2", "--trials", "10", "--p", "0.5", "--lambda", "1.0"]) == 2

    def test_domain_error_exit(self):
        assert run(["estimate-phi", "--site", "1", "--trials", "5"]) == 2
        assert run(["estimate-h", "--n", "1", "--trials", "5", "--p", "1.5"]) == 2
        assert run(["estimate-h", "--n", "1", "--trials", "50"]) == 2

    def test_min_trials_from_config(self, tmp_path):
        path = tmp_path / "smoke.json"
        path.write_text(json.dumps({"min_trials": 1}), encoding="utf-8")
        assert run(["estimate-h", "--n", "1", "--trials", "20", "--buffer", "1", "--config", str(path), "--out", str(tmp_path / "h.csv")]) == 0

    def test_usage_errors(self):
        assert run(["no-such-command"]) == 2
        assert run(["estimate-h", "--trials", "many"]) == 2

    def test_missing_table_file(self, tmp_path):
        assert run(["fourier", "--table", str(tmp_path / "missing.txt")]) == 2

    def test_version(self, capsys):
        assert run(["--version"]) == 0
        assert "ersa-lab" in capsys.readouterr().out
