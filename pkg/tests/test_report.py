"""
Frame log and leakage report tests
"""

import io

import pytest

from qkdlink.exceptions import SchemaError
from qkdlink.net.report import (
    FRAME_COLUMNS,
    STATUS_DECODE,
    STATUS_NO_KEY,
    STATUS_OK,
    STATUS_QBER,
    FrameLogRow,
    SessionReport,
    leakage_report,
    read_frame_log,
    write_frame_log,
)
from qkdlink.security.bounds import finite_key_length
from qkdlink.security.budget import SecurityBudget


def _make_row(frame_id: int = 1, n: int = 200_000, q_tilde: float = 0.045, leak_ec: int = 48_000,
              q_hat: float = 0.0325) -> FrameLogRow:
    budget = SecurityBudget().resolved(n)
    result = finite_key_length(n, q_tilde, leak_ec, 34, 172, 1.0, budget, q_hat=q_hat)
    status = STATUS_OK if result.l_key > 0 else STATUS_NO_KEY
    return FrameLogRow.from_result(frame_id, status, n // 9, q_hat, 0.75, 0.76, 1, result)


class TestFrameLog:

    def test_round_trip_keeps_values(self, tmp_path):
        rows = [
            _make_row(1),
            FrameLogRow(frame_id=2, status=STATUS_QBER, n=200_000, m=22_222, q_hat=0.13),
        ]
        path = tmp_path / "frames.csv"
        write_frame_log(path, rows)
        back = read_frame_log(path)
        assert back[0] == rows[0]
        assert back[1].status == STATUS_QBER
        assert not back[1].has_breakdown

    def test_header(self):
        out = io.StringIO()
        write_frame_log(out, [_make_row()])
        lines = out.getvalue().splitlines()
        assert lines[0] == "# schema: qkdlink.frames/1"
        assert lines[1].split(",") == list(FRAME_COLUMNS)

    def test_wrong_schema(self):
        with pytest.raises(SchemaError):
            read_frame_log(io.StringIO("# schema: qkdlink.frames/0\n"))

    def test_wrong_columns(self):
        with pytest.raises(SchemaError, match="columns"):
            read_frame_log(io.StringIO("# schema: qkdlink.frames/1\nframe_id,status\n1,ok\n"))

    def test_malformed_value(self):
        out = io.StringIO()
        write_frame_log(out, [_make_row()])
        broken = out.getvalue().replace("\n1,ok,", "\nx,ok,")
        with pytest.raises(SchemaError):
            read_frame_log(io.StringIO(broken))


class TestLeakageReport:

    def test_categories_account_for_each_frame(self):
        rows = [_make_row(1), _make_row(2, leak_ec=52_000)]
        report = leakage_report(rows)
        total = sum(report.aggregate.values())
        expected = sum(r.n - r.unclamped_length for r in rows)
        assert total == pytest.approx(expected, abs=2.0)
        assert report.secret_bits == sum(r.l_key for r in rows)
        assert sum(report.shares.values()) == pytest.approx(1.0)

    def test_frames_without_breakdown_skipped(self):
        rows = [_make_row(1), FrameLogRow(frame_id=2, status=STATUS_DECODE, n=200_000, m=22_222)]
        report = leakage_report(rows)
        assert [r.frame_id for r in report.frames] == [1]
        assert report.total_key_bits == 200_000

    def test_secret_fraction(self):
        row = _make_row()
        report = leakage_report([row])
        assert report.secret_fraction == pytest.approx(row.l_key / (row.n + row.m))

    def test_inconsistent_row_rejected(self):
        row = _make_row()
        row.leakage["error_correction"] += 10.0
        with pytest.raises(SchemaError, match="sum"):
            leakage_report([row])

    def test_render_lists_every_category(self):
        text = leakage_report([_make_row()]).render()
        for category in ("error_correction", "finite_size", "authentication", "rounding"):
            assert category in text
        assert "secret fraction" in text


class TestSessionReport:

    def test_counts(self):
        report = SessionReport(role="alice", simulated_time_s=2.0, secret_bits=1_000)
        report.frames = [
            FrameLogRow(1, STATUS_OK, 100, 10),
            FrameLogRow(2, STATUS_QBER, 100, 10),
            FrameLogRow(3, STATUS_QBER, 100, 10),
        ]
        assert report.frames_ok == 1
        assert report.discards[STATUS_QBER] == 2
        assert report.discards[STATUS_DECODE] == 0
        assert report.secret_key_rate_bps == 500.0

    def test_zero_time_rate(self):
        assert SessionReport(role="bob").secret_key_rate_bps == 0.0

    def test_summary_names_abort_reason(self):
        report = SessionReport(role="bob", aborted=True, abort_reason="authentication_failed")
        assert "aborted (authentication_failed)" in report.summary()
