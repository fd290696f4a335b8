"""
Session Reports

The per-frame log is a versioned CSV:

    # schema: qkdlink.frames/1
    frame_id,status,n,m,q_hat,q_tilde,rate,effective_rate,attempts,leak_ec,l_key,unclamped_length,leak_...

Statuses: ok, scan_discard, qber_too_high, decode_failed, verify_mismatch, no_key.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, TextIO, Union

from qkdlink.exceptions import SchemaError
from qkdlink.security.budget import KeyLengthResult, LeakageBreakdown

FRAMES_SCHEMA = "qkdlink.frames/1"
LEAK_COLUMNS = tuple(f"leak_{c}" for c in LeakageBreakdown.CATEGORIES)
FRAME_COLUMNS = (
    "frame_id", "status", "n", "m", "q_hat", "q_tilde", "rate", "effective_rate",
    "attempts", "leak_ec", "l_key", "unclamped_length",
) + LEAK_COLUMNS

STATUS_OK = "ok"
STATUS_SCAN = "scan_discard"
STATUS_QBER = "qber_too_high"
STATUS_DECODE = "decode_failed"
STATUS_VERIFY = "verify_mismatch"
STATUS_NO_KEY = "no_key"
DISCARD_STATUSES = (STATUS_SCAN, STATUS_QBER, STATUS_DECODE, STATUS_VERIFY, STATUS_NO_KEY)

# Sum check tolerance for a frame's categories against n − unclamped length.
BREAKDOWN_TOLERANCE_BITS = 1.0


@dataclass
class FrameLogRow:
    frame_id: int
    status: str
    n: int
    m: int
    q_hat: float = float("nan")
    q_tilde: float = float("nan")
    rate: float = float("nan")
    effective_rate: float = float("nan")
    attempts: int = 0
    leak_ec: int = 0
    l_key: int = 0
    unclamped_length: int = 0
    leakage: Dict[str, float] = field(default_factory=dict)

    @classmethod
    def from_result(cls, frame_id: int, status: str, m: int, q_hat: float, rate: float,
                    effective_rate: float, attempts: int, result: KeyLengthResult) -> "FrameLogRow":
        return cls(
            frame_id=frame_id,
            status=status,
            n=result.n,
            m=m,
            q_hat=q_hat,
            q_tilde=result.q_tilde_used,
            rate=rate,
            effective_rate=effective_rate,
            attempts=attempts,
            leak_ec=result.leak_ec,
            l_key=result.l_key if status == STATUS_OK else 0,
            unclamped_length=result.unclamped_length,
            leakage=result.breakdown.to_dict(),
        )

    @property
    def has_breakdown(self) -> bool:
        return bool(self.leakage)

    def breakdown(self) -> LeakageBreakdown:
        return LeakageBreakdown(**self.leakage)

    def to_row(self) -> Dict[str, object]:
        row = {
            "frame_id": self.frame_id,
            "status": self.status,
            "n": self.n,
            "m": self.m,
            "q_hat": _fmt(self.q_hat),
            "q_tilde": _fmt(self.q_tilde),
            "rate": _fmt(self.rate),
            "effective_rate": _fmt(self.effective_rate),
            "attempts": self.attempts,
            "leak_ec": self.leak_ec,
            "l_key": self.l_key,
            "unclamped_length": self.unclamped_length,
        }
        for category, column in zip(LeakageBreakdown.CATEGORIES, LEAK_COLUMNS):
            row[column] = _fmt(self.leakage[category]) if self.leakage else ""
        return row

    @classmethod
    def from_row(cls, row: Dict[str, str]) -> "FrameLogRow":
        leakage = {}
        if all(row[c] != "" for c in LEAK_COLUMNS):
            leakage = {cat: float(row[col]) for cat, col in zip(LeakageBreakdown.CATEGORIES, LEAK_COLUMNS)}
        return cls(
            frame_id=int(row["frame_id"]),
            status=row["status"],
            n=int(row["n"]),
            m=int(row["m"]),
            q_hat=float(row["q_hat"]),
            q_tilde=float(row["q_tilde"]),
            rate=float(row["rate"]),
            effective_rate=float(row["effective_rate"]),
            attempts=int(row["attempts"]),
            leak_ec=int(row["leak_ec"]),
            l_key=int(row["l_key"]),
            unclamped_length=int(row["unclamped_length"]),
            leakage=leakage,
        )


def _fmt(value: float) -> str:
    return repr(float(value))


@dataclass
class SessionReport:
    """
    Outcome of one session for one role

    Attributes:
        secret_bits: Σ l_key over frames with status ok
        frames: Per-frame log rows
        key_digest: SHA-256 over the concatenated packed secret keys
        transcript_digest: SHA-256 over every authenticated frame transcript
        simulated_time_s: Link time the session consumed
        auth_bits_consumed / auth_bits_replenished: Ledger accounting
    """

    role: str
    frames: List[FrameLogRow] = field(default_factory=list)
    secret_bits: int = 0
    aborted: bool = False
    abort_reason: Optional[str] = None
    key_digest: str = ""
    transcript_digest: str = ""
    simulated_time_s: float = 0.0
    auth_bits_consumed: int = 0
    auth_bits_replenished: int = 0
    nu_auth_total: int = 0
    config_digest: str = ""

    @property
    def frames_ok(self) -> int:
        return sum(1 for f in self.frames if f.status == STATUS_OK)

    @property
    def discards(self) -> Dict[str, int]:
        counts = {status: 0 for status in DISCARD_STATUSES}
        for f in self.frames:
            if f.status in counts:
                counts[f.status] += 1
        return counts

    @property
    def secret_key_rate_bps(self) -> float:
        return self.secret_bits / self.simulated_time_s if self.simulated_time_s > 0 else 0.0

    def summary(self) -> str:
        lines = [
            f"role:               {self.role}",
            f"status:             {'aborted (' + str(self.abort_reason) + ')' if self.aborted else 'completed'}",
            f"frames:             {len(self.frames)} ({self.frames_ok} ok)",
            f"discards:           " + ", ".join(f"{k}={v}" for k, v in self.discards.items()),
            f"secret bits:        {self.secret_bits}",
            f"simulated time:     {self.simulated_time_s:.3f} s",
            f"secret key rate:    {self.secret_key_rate_bps:.1f} bit/s",
            f"auth bits:          consumed {self.auth_bits_consumed}, replenished {self.auth_bits_replenished}",
            f"key digest:         {self.key_digest}",
        ]
        return "\n".join(lines)


# =====================================================
# CSV
# =====================================================

def write_frame_log(target: Union[str, Path, TextIO], rows: Iterable[FrameLogRow]) -> None:
    if isinstance(target, (str, Path)):
        with open(target, "w", newline="") as handle:
            write_frame_log(handle, rows)
        return
    target.write(f"# schema: {FRAMES_SCHEMA}\n")
    writer = csv.DictWriter(target, fieldnames=FRAME_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row.to_row())


def read_frame_log(source: Union[str, Path, TextIO]) -> List[FrameLogRow]:
    """
    Read a frame log

    Raises:
        SchemaError: If the schema line or the columns do not match
    """
    if isinstance(source, (str, Path)):
        with open(source, newline="") as handle:
            return read_frame_log(handle)
    first = source.readline().strip()
    if first != f"# schema: {FRAMES_SCHEMA}":
        raise SchemaError(f"expected schema {FRAMES_SCHEMA}, got {first!r}")
    reader = csv.DictReader(source)
    if tuple(reader.fieldnames or ()) != FRAME_COLUMNS:
        raise SchemaError(f"frame log columns {reader.fieldnames} do not match {list(FRAME_COLUMNS)}")
    try:
        return [FrameLogRow.from_row(row) for row in reader]
    except (KeyError, ValueError) as exc:
        raise SchemaError(f"malformed frame log row: {exc}") from exc


# =====================================================
# Leakage breakdown
# =====================================================

@dataclass
class LeakageReport:
    frames: List[FrameLogRow]
    aggregate: Dict[str, float]
    total_key_bits: int
    total_sample_bits: int
    secret_bits: int

    @property
    def secret_fraction(self) -> float:
        """l_key per consumed sifted bit."""
        consumed = self.total_key_bits + self.total_sample_bits
        return self.secret_bits / consumed if consumed else 0.0

    @property
    def shares(self) -> Dict[str, float]:
        total = sum(self.aggregate.values())
        return {k: (v / total if total else 0.0) for k, v in self.aggregate.items()}

    def render(self) -> str:
        out = io.StringIO()
        out.write(f"{'frame':>6} {'status':<16} {'n':>8} {'l_key':>8} " +
                  " ".join(f"{c[:12]:>12}" for c in LeakageBreakdown.CATEGORIES) + "\n")
        for row in self.frames:
            cells = " ".join(f"{row.leakage.get(c, 0.0):>12.1f}" for c in LeakageBreakdown.CATEGORIES)
            out.write(f"{row.frame_id:>6} {row.status:<16} {row.n:>8} {row.l_key:>8} {cells}\n")
        out.write("\naggregate\n")
        for category in LeakageBreakdown.CATEGORIES:
            out.write(f"  {category:<18} {self.aggregate[category]:>14.1f}  {100 * self.shares[category]:6.2f}%\n")
        out.write(f"  {'secret bits':<18} {self.secret_bits:>14d}\n")
        out.write(f"  {'secret fraction':<18} {self.secret_fraction:>14.4f}\n")
        return out.getvalue()


def leakage_report(rows: Iterable[FrameLogRow]) -> LeakageReport:
    """
    Per-frame and aggregate breakdown of n − l_key

    Only frames that reached the key-length computation carry a breakdown.

    Raises:
        SchemaError: If a frame's categories do not sum to n − unclamped length
            within one bit, or a category is negative
    """
    rows = [r for r in rows if r.has_breakdown]
    aggregate = {c: 0.0 for c in LeakageBreakdown.CATEGORIES}
    for row in rows:
        expected = row.n - row.unclamped_length
        total = sum(row.leakage.values())
        if abs(total - expected) > BREAKDOWN_TOLERANCE_BITS:
            raise SchemaError(f"frame {row.frame_id}: categories sum to {total:.2f}, expected {expected}")
        negative = [c for c, v in row.leakage.items() if v < -BREAKDOWN_TOLERANCE_BITS]
        if negative:
            raise SchemaError(f"frame {row.frame_id}: negative categories {negative}")
        for category, value in row.leakage.items():
            aggregate[category] += value
    return LeakageReport(
        frames=rows,
        aggregate=aggregate,
        total_key_bits=sum(r.n for r in rows),
        total_sample_bits=sum(r.m for r in rows),
        secret_bits=sum(r.l_key for r in rows if r.status == STATUS_OK),
    )
