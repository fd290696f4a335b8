"""
Message Payloads

Bit vectors travel packed (np.packbits, MSB first) behind a u32 bit count.
Each payload class round-trips through to_bytes/from_bytes; malformed
input raises ProtocolError.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum
from typing import Tuple

import numpy as np

from qkdlink.exceptions import ProtocolError


U8 = struct.Struct(">B")
U32 = struct.Struct(">I")
SYNDROME_HEADER = struct.Struct(">Bd")
DETECTIONS_HEADER = struct.Struct(">QB")
PA_HEADER = struct.Struct(">II")
VERIFY_TAG = struct.Struct(">Q")


class BasisKind(IntEnum):
    DETECTIONS = 0   # Bob → Alice: clicked slots of a chunk
    BASES = 1        # Alice → Bob: her bases at those slots
    MATCHES = 2      # Bob → Alice: matched-basis mask


class AckStatus(IntEnum):
    HELLO = 0x00
    DECODED = 0x01
    DECODE_FAILED = 0x02
    VERIFIED = 0x03
    VERIFY_MISMATCH = 0x04
    DONE = 0x05
    DISCARD_SCAN = 0x10
    DISCARD_QBER = 0x11
    DISCARD_NO_KEY = 0x12


def pack_bits(bits) -> bytes:
    arr = np.asarray(bits, dtype=np.uint8)
    return U32.pack(arr.size) + np.packbits(arr).tobytes()


def unpack_bits(data: bytes, offset: int = 0) -> Tuple[np.ndarray, int]:
    """(bits, offset after the field)"""
    if len(data) < offset + U32.size:
        raise ProtocolError("truncated bit-vector length")
    (count,) = U32.unpack_from(data, offset)
    start = offset + U32.size
    end = start + (count + 7) // 8
    if len(data) < end:
        raise ProtocolError(f"truncated bit vector: need {end - start} bytes, have {len(data) - start}")
    bits = np.unpackbits(np.frombuffer(data[start:end], dtype=np.uint8), count=count)
    return bits, end


def _expect_end(data: bytes, offset: int, what: str) -> None:
    if offset != len(data):
        raise ProtocolError(f"{len(data) - offset} trailing bytes in {what}")


def _kind(data: bytes) -> BasisKind:
    if not data:
        raise ProtocolError("empty basis announcement")
    try:
        return BasisKind(data[0])
    except ValueError:
        raise ProtocolError(f"unknown basis announcement kind {data[0]}") from None


# =====================================================
# BASIS_ANNOUNCE
# =====================================================

@dataclass
class DetectionsPayload:
    """Clicked slots of one chunk as u32 offsets from chunk_start."""

    chunk_start: int
    scanning: bool
    offsets: np.ndarray

    def to_bytes(self) -> bytes:
        offsets = np.asarray(self.offsets, dtype=">u4")
        return (
            U8.pack(BasisKind.DETECTIONS)
            + DETECTIONS_HEADER.pack(self.chunk_start, int(self.scanning))
            + U32.pack(offsets.size)
            + offsets.tobytes()
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "DetectionsPayload":
        if _kind(data) != BasisKind.DETECTIONS:
            raise ProtocolError("expected a DETECTIONS announcement")
        head = 1 + DETECTIONS_HEADER.size + U32.size
        if len(data) < head:
            raise ProtocolError("truncated detections header")
        chunk_start, scanning = DETECTIONS_HEADER.unpack_from(data, 1)
        (count,) = U32.unpack_from(data, 1 + DETECTIONS_HEADER.size)
        _expect_end(data, head + 4 * count, "detections")
        offsets = np.frombuffer(data[head:], dtype=">u4").astype(np.int64)
        return cls(chunk_start, bool(scanning), offsets)

    @property
    def pulse_index(self) -> np.ndarray:
        return self.chunk_start + np.asarray(self.offsets, dtype=np.int64)


@dataclass
class BitsAnnouncement:
    """BASES or MATCHES: one bit per announced slot."""

    kind: BasisKind
    bits: np.ndarray

    def to_bytes(self) -> bytes:
        return U8.pack(self.kind) + pack_bits(self.bits)

    @classmethod
    def from_bytes(cls, data: bytes, expected: BasisKind) -> "BitsAnnouncement":
        kind = _kind(data)
        if kind != expected:
            raise ProtocolError(f"expected {expected.name}, got {kind.name}")
        bits, end = unpack_bits(data, 1)
        _expect_end(data, end, kind.name)
        return cls(kind, bits)


# =====================================================
# Frame payloads
# =====================================================

def encode_sample(bits) -> bytes:
    return pack_bits(bits)


def decode_sample(data: bytes) -> np.ndarray:
    bits, end = unpack_bits(data)
    _expect_end(data, end, "sample")
    return bits


@dataclass
class SyndromePayload:
    attempt: int
    rate: float
    syndrome: np.ndarray

    def to_bytes(self) -> bytes:
        return SYNDROME_HEADER.pack(self.attempt, self.rate) + pack_bits(self.syndrome)

    @classmethod
    def from_bytes(cls, data: bytes) -> "SyndromePayload":
        if len(data) < SYNDROME_HEADER.size:
            raise ProtocolError("truncated syndrome header")
        attempt, rate = SYNDROME_HEADER.unpack_from(data)
        bits, end = unpack_bits(data, SYNDROME_HEADER.size)
        _expect_end(data, end, "syndrome")
        return cls(attempt, rate, bits)


@dataclass
class VerifyPayload:
    """Verification key (k, a) and Alice's tag."""

    key: bytes
    tag: int

    KEY_BYTES = 16

    def to_bytes(self) -> bytes:
        return bytes(self.key) + VERIFY_TAG.pack(self.tag)

    @classmethod
    def from_bytes(cls, data: bytes) -> "VerifyPayload":
        if len(data) != cls.KEY_BYTES + VERIFY_TAG.size:
            raise ProtocolError(f"verify payload must be {cls.KEY_BYTES + VERIFY_TAG.size} bytes, got {len(data)}")
        (tag,) = VERIFY_TAG.unpack_from(data, cls.KEY_BYTES)
        return cls(bytes(data[:cls.KEY_BYTES]), tag)


@dataclass
class SeedPayload:
    """Toeplitz dimensions and packed seed."""

    n: int
    l_out: int
    seed: bytes

    def to_bytes(self) -> bytes:
        return PA_HEADER.pack(self.n, self.l_out) + bytes(self.seed)

    @classmethod
    def from_bytes(cls, data: bytes) -> "SeedPayload":
        if len(data) < PA_HEADER.size:
            raise ProtocolError("truncated PA seed header")
        n, l_out = PA_HEADER.unpack_from(data)
        return cls(n, l_out, bytes(data[PA_HEADER.size:]))


@dataclass
class AckPayload:
    status: AckStatus
    body: bytes = b""

    def to_bytes(self) -> bytes:
        return U8.pack(self.status) + bytes(self.body)

    @classmethod
    def from_bytes(cls, data: bytes) -> "AckPayload":
        if not data:
            raise ProtocolError("empty FRAME_ACK")
        try:
            status = AckStatus(data[0])
        except ValueError:
            raise ProtocolError(f"unknown ack status 0x{data[0]:02X}") from None
        return cls(status, bytes(data[1:]))


def encode_abort(reason: str) -> bytes:
    return reason.encode("utf-8")


def decode_abort(data: bytes) -> str:
    return data.decode("utf-8", errors="replace")
