"""
Command-line tests

Small inputs only: a millisecond of simulated link, a three-point sweep and
a hand-written frame log.
"""

import json

import pytest

from qkdlink.cli import build_parser, main
from qkdlink.main import QKDLink
from qkdlink.net.report import STATUS_OK, FrameLogRow, write_frame_log
from qkdlink.security.bounds import finite_key_length
from qkdlink.security.budget import SecurityBudget
from qkdlink.utils.config import ExperimentConfig


def _write_config(tmp_path, text: str):
    path = tmp_path / "link.conf"
    path.write_text(text)
    return str(path)


class TestSimulate:

    def test_writes_records_and_summary(self, tmp_path, capsys):
        config = _write_config(tmp_path, "duration_s = 0.001\nchunk_pulses = 16384\n")
        out = tmp_path / "out"
        assert main(["--config", config, "--out", str(out), "simulate"]) == 0

        summary = json.loads((out / "summary.json").read_text())
        assert summary["clicks"] > 0
        assert (out / "clicks.bin").stat().st_size > 0
        assert (out / "pulses.bin").exists()
        assert "Click rate" in capsys.readouterr().out

    def test_same_seed_same_bytes(self, tmp_path):
        config = _write_config(tmp_path, "duration_s = 0.001\nchunk_pulses = 16384\n")
        main(["--config", config, "--seed", "5", "--out", str(tmp_path / "a"), "simulate"])
        main(["--config", config, "--seed", "5", "--out", str(tmp_path / "b"), "simulate"])
        for name in ("clicks.bin", "pulses.bin", "summary.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_no_pulse_records(self, tmp_path):
        config = _write_config(tmp_path, "duration_s = 0.001\nrecord_mode = none\n")
        out = tmp_path / "out"
        assert main(["--config", config, "--out", str(out), "simulate"]) == 0
        assert not (out / "pulses.bin").exists()


class TestSweep:

    def test_three_points(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["--out", str(out), "sweep", "--loss-db", "0:4:2", "--jobs", "2"]) == 0
        lines = (out / "sweep.csv").read_text().splitlines()
        assert lines[0] == "# schema: qkdlink.sweep/1"
        assert len(lines) == 2 + 3
        assert (out / "overlay.csv").exists()
        assert "reaches zero" in capsys.readouterr().out

    def test_bad_range(self, tmp_path, capsys):
        assert main(["--out", str(tmp_path), "sweep", "--loss-db", "zero"]) == 1
        assert "Error" in capsys.readouterr().out


class TestReport:

    def _frame_log(self, tmp_path):
        budget = SecurityBudget().resolved(200_000)
        result = finite_key_length(200_000, 0.045, 48_000, 34, 172, 1.0, budget, q_hat=0.0325)
        row = FrameLogRow.from_result(1, STATUS_OK, 22_222, 0.0325, 0.75, 0.76, 1, result)
        path = tmp_path / "frames_alice.csv"
        write_frame_log(path, [row])
        return path

    def test_breakdown_printed(self, tmp_path, capsys):
        path = self._frame_log(tmp_path)
        assert main(["report", str(path)]) == 0
        out = capsys.readouterr().out
        assert "error_correction" in out
        assert "secret bits" in out

    def test_empty_log(self, tmp_path, capsys):
        path = tmp_path / "frames_bob.csv"
        write_frame_log(path, [])
        assert main(["report", str(path)]) == 0
        assert "No frames" in capsys.readouterr().out

    def test_wrong_schema(self, tmp_path, capsys):
        path = tmp_path / "frames.csv"
        path.write_text("frame_id,status\n")
        assert main(["report", str(path)]) == 1


class TestParser:

    def test_no_command_prints_help(self, capsys):
        assert main([]) == 0
        assert "usage" in capsys.readouterr().out

    def test_listen_and_connect_exclusive(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["alice", "--listen", "a:1", "--connect", "b:2"])

    def test_missing_config_file(self, tmp_path, capsys):
        assert main(["--config", str(tmp_path / "absent.conf"), "simulate"]) == 1
        assert "not found" in capsys.readouterr().out


class TestQKDLink:

    def test_from_file_overrides(self, tmp_path):
        path = _write_config(tmp_path, "frames = 4\n")
        link = QKDLink.from_file(path, frames=2, seed=None)
        assert link.config.frames == 2
        assert link.config.seed == ExperimentConfig().seed

    def test_session_outputs(self, tmp_path):
        from qkdlink.net.report import SessionReport

        link = QKDLink(ExperimentConfig(out_dir=tmp_path))
        paths = link.write_session_outputs(SessionReport(role="alice"))
        assert [p.name for p in paths] == ["frames_alice.csv", "summary_alice.txt"]
        assert QKDLink.report(paths[0]).frames == []
