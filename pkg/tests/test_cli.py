import json
import subprocess
import sys

import pytest

from peleg.cli import main
from peleg.experiments import RECORD_HEADER, SUMMARY_HEADER


class TestSweep:
    def test_writes_records_and_summary(self, tmp_path):
        out = tmp_path / "results.csv"
        code = main(["sweep", "--setting", "standard", "--sweep", "0.4,0.5",
                     "--delta", "0.1", "--trials", "2",
                     "--algorithms", "uniform_static", "--seed", "3",
                     "--out", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == RECORD_HEADER
        assert len(lines) == 1 + 2 * 2  # params x trials rows
        summary = (tmp_path / "results.summary.csv").read_text().splitlines()
        assert summary[0] == SUMMARY_HEADER
        assert len(summary) == 1 + 2

    def test_config_file_with_flag_override(self, tmp_path):
        cfg = tmp_path / "spec.json"
        cfg.write_text(json.dumps({
            "setting": "standard", "sweep": [0.5], "trials": 4,
            "algorithms": ["uniform_static"], "base_seed": 2,
        }))
        out = tmp_path / "r.csv"
        code = main(["sweep", "--config", str(cfg), "--trials", "1",
                     "--out", str(out)])
        assert code == 0
        assert len(out.read_text().splitlines()) == 1 + 1  # flag overrode trials

    def test_bad_config_field_named(self, tmp_path, capsys):
        cfg = tmp_path / "spec.json"
        cfg.write_text(json.dumps({"setting": "standard", "sweeep": [0.5]}))
        code = main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "r.csv")])
        assert code == 2
        assert "sweeep" in capsys.readouterr().err

    def test_unknown_flag_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["sweep", "--bogus", "1", "--out", "/tmp/x.csv"])
        assert exc.value.code == 2


class TestOracle:
    def test_prints_hardness_and_lower_bound(self, capsys):
        code = main(["oracle", "--setting", "standard", "--param", "0.4",
                     "--method", "game-solver", "--budget", "4000"])
        assert code == 0
        out = capsys.readouterr().out
        assert "hardness" in out
        value = float(out.splitlines()[0].split()[2])
        assert value == pytest.approx(0.4**2 / 9, rel=0.05)
        assert "lower bound" in out

    def test_requires_param(self, capsys):
        code = main(["oracle", "--setting", "standard"])
        assert code == 2
        assert "--param" in capsys.readouterr().err


class TestRun:
    def test_run_reports_result(self, capsys):
        code = main(["run", "--setting", "confound", "--param", "2",
                     "--omega", "0.4", "--seed", "1"])
        assert code == 0
        out = capsys.readouterr().out
        assert "recommended arm: 0" in out
        assert "phase 1:" in out


class TestHelp:
    @pytest.mark.parametrize("sub,flags", [
        ("run", ["--setting", "--param", "--delta", "--seed", "--use-ball",
                 "--trace", "--omega"]),
        ("sweep", ["--setting", "--sweep", "--delta", "--trials", "--seed",
                   "--workers", "--use-ball", "--full", "--out", "--config",
                   "--algorithms"]),
        ("oracle", ["--setting", "--param", "--method", "--budget"]),
    ])
    def test_help_lists_flags(self, sub, flags, capsys):
        with pytest.raises(SystemExit) as exc:
            main([sub, "--help"])
        assert exc.value.code == 0
        text = capsys.readouterr().out
        for flag in flags:
            assert flag in text

    def test_console_script_installed(self):
        proc = subprocess.run([sys.executable, "-m", "peleg.cli", "--help"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert "selftest" in proc.stdout
