"""
Pulse and Click Records

Column-oriented containers for emitted pulses and receiver clicks, the
single-record views over them, and the fixed-width binary file format.

Binary layout (little-endian, 18 bytes per record, no header):

    u64  pulse_index
    u8   flags
    u8   basis/bit code
    f64  timestamp_s

Pulse files: flags = photon_count, code = (basis << 1) | bit.
Click files: flags bit0 = is_dark, bit1 = scan marker, code = detector_id.
Frame files: flags bit0 = estimation-sample member, code = bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Iterator, Optional, Union

import numpy as np

from qkdlink.exceptions import SchemaError


RECORD_DTYPE = np.dtype(
    [("pulse_index", "<u8"), ("flags", "u1"), ("code", "u1"), ("timestamp", "<f8")]
)

CLICK_FLAG_DARK = 0x01
CLICK_FLAG_SCAN = 0x02


class Basis(IntEnum):
    X = 0
    Z = 1


def detector_id(basis, bit):
    """One detector per PBS output: X→{0,1}, Z→{2,3}."""
    return 2 * np.asarray(basis) + np.asarray(bit)


@dataclass(frozen=True)
class PulseRecord:
    pulse_index: int
    basis: Basis
    bit: int
    photon_count: int
    timestamp_s: float


@dataclass(frozen=True)
class ClickRecord:
    """
    One registered detection.

    Dark counts keep the pulse slot they were folded into; Bob cannot tell
    them apart from signal clicks, `is_dark` is simulation truth only.
    """

    pulse_index: int
    detector_id: int
    timestamp_s: float
    is_dark: bool

    @property
    def basis(self) -> Basis:
        return Basis(self.detector_id // 2)

    @property
    def bit(self) -> int:
        return self.detector_id % 2


@dataclass
class PulseTrain:
    """Emitted pulses, one entry per pulse slot."""

    pulse_index: np.ndarray
    basis: np.ndarray
    bit: np.ndarray
    photon_count: np.ndarray
    timestamp_s: np.ndarray

    def __len__(self) -> int:
        return int(self.pulse_index.size)

    def __getitem__(self, i: int) -> PulseRecord:
        return PulseRecord(
            pulse_index=int(self.pulse_index[i]),
            basis=Basis(int(self.basis[i])),
            bit=int(self.bit[i]),
            photon_count=int(self.photon_count[i]),
            timestamp_s=float(self.timestamp_s[i]),
        )

    def __iter__(self) -> Iterator[PulseRecord]:
        for i in range(len(self)):
            yield self[i]

    @property
    def start_index(self) -> int:
        return int(self.pulse_index[0]) if len(self) else 0

    def at(self, pulse_indices: np.ndarray) -> "PulseTrain":
        """Sub-train at absolute pulse indices (must lie inside this train)."""
        local = np.asarray(pulse_indices, dtype=np.int64) - self.start_index
        return PulseTrain(
            pulse_index=self.pulse_index[local],
            basis=self.basis[local],
            bit=self.bit[local],
            photon_count=self.photon_count[local],
            timestamp_s=self.timestamp_s[local],
        )

    def to_records(self) -> np.ndarray:
        out = np.empty(len(self), dtype=RECORD_DTYPE)
        out["pulse_index"] = self.pulse_index
        out["flags"] = self.photon_count
        out["code"] = (self.basis.astype(np.uint8) << 1) | self.bit.astype(np.uint8)
        out["timestamp"] = self.timestamp_s
        return out

    @classmethod
    def from_records(cls, records: np.ndarray) -> "PulseTrain":
        code = records["code"]
        return cls(
            pulse_index=records["pulse_index"].astype(np.int64),
            basis=(code >> 1).astype(np.uint8),
            bit=(code & 1).astype(np.uint8),
            photon_count=records["flags"].astype(np.uint8),
            timestamp_s=records["timestamp"].astype(np.float64),
        )


@dataclass
class ClickTrain:
    """
    Registered clicks, sorted by (pulse_index, detector_id).

    `last_click_s` carries each detector's last registered time so dead time
    can continue into the next chunk.
    """

    pulse_index: np.ndarray
    detector_id: np.ndarray
    timestamp_s: np.ndarray
    is_dark: np.ndarray
    scan: np.ndarray = None
    last_click_s: np.ndarray = field(default_factory=lambda: np.full(4, -np.inf))

    def __post_init__(self):
        if self.scan is None:
            self.scan = np.zeros(self.pulse_index.size, dtype=bool)

    def __len__(self) -> int:
        return int(self.pulse_index.size)

    def __getitem__(self, i: int) -> ClickRecord:
        return ClickRecord(
            pulse_index=int(self.pulse_index[i]),
            detector_id=int(self.detector_id[i]),
            timestamp_s=float(self.timestamp_s[i]),
            is_dark=bool(self.is_dark[i]),
        )

    def __iter__(self) -> Iterator[ClickRecord]:
        for i in range(len(self)):
            yield self[i]

    @classmethod
    def empty(cls, last_click_s: Optional[np.ndarray] = None) -> "ClickTrain":
        return cls(
            pulse_index=np.zeros(0, dtype=np.int64),
            detector_id=np.zeros(0, dtype=np.uint8),
            timestamp_s=np.zeros(0, dtype=np.float64),
            is_dark=np.zeros(0, dtype=bool),
            last_click_s=np.full(4, -np.inf) if last_click_s is None else last_click_s,
        )

    @property
    def basis(self) -> np.ndarray:
        return (self.detector_id // 2).astype(np.uint8)

    @property
    def bit(self) -> np.ndarray:
        return (self.detector_id % 2).astype(np.uint8)

    def to_records(self) -> np.ndarray:
        out = np.empty(len(self), dtype=RECORD_DTYPE)
        out["pulse_index"] = self.pulse_index
        out["flags"] = (self.is_dark.astype(np.uint8) * CLICK_FLAG_DARK) | (
            self.scan.astype(np.uint8) * CLICK_FLAG_SCAN
        )
        out["code"] = self.detector_id
        out["timestamp"] = self.timestamp_s
        return out

    @classmethod
    def from_records(cls, records: np.ndarray) -> "ClickTrain":
        flags = records["flags"]
        return cls(
            pulse_index=records["pulse_index"].astype(np.int64),
            detector_id=records["code"].astype(np.uint8),
            timestamp_s=records["timestamp"].astype(np.float64),
            is_dark=(flags & CLICK_FLAG_DARK).astype(bool),
            scan=(flags & CLICK_FLAG_SCAN).astype(bool),
        )


# =====================================================
# File IO
# =====================================================

def write_records(path: Union[str, Path], records: np.ndarray, append: bool = False) -> int:
    """Write a record array; returns the number of records written."""
    records = np.asarray(records, dtype=RECORD_DTYPE)
    with open(path, "ab" if append else "wb") as fh:
        fh.write(records.tobytes())
    return int(records.size)


def read_records(path: Union[str, Path]) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) % RECORD_DTYPE.itemsize:
        raise SchemaError(
            f"{path} is not a whole number of {RECORD_DTYPE.itemsize}-byte records "
            f"({len(data)} bytes)"
        )
    return np.frombuffer(data, dtype=RECORD_DTYPE).copy()
