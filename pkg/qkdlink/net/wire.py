"""
Wire Format

Every message on the classical channel is

    length    u32   bytes after this field (17 + payload)
    type      u8    MessageType
    frame_id  u64
    sequence  u64   strictly increasing per direction
    payload   bytes

All integers are big-endian.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum
from typing import List, Optional

from qkdlink.exceptions import ProtocolError


HEADER = struct.Struct(">IBQQ")
LENGTH = struct.Struct(">I")
HEADER_BODY_LEN = HEADER.size - LENGTH.size   # 17
MAX_MESSAGE_LEN = 1 << 28


class MessageType(IntEnum):
    BASIS_ANNOUNCE = 0x01
    SAMPLE_DISCLOSE = 0x02
    SYNDROME = 0x03
    VERIFY_HASH = 0x04
    PA_SEED = 0x05
    AUTH_TAG = 0x06
    ABORT = 0x07
    FRAME_ACK = 0x08


@dataclass(frozen=True)
class WireMessage:
    msg_type: MessageType
    frame_id: int
    sequence: int
    payload: bytes = b""

    @property
    def length(self) -> int:
        return HEADER_BODY_LEN + len(self.payload)


def encode_message(message: WireMessage) -> bytes:
    """Serialize one message, length prefix included."""
    if message.length > MAX_MESSAGE_LEN:
        raise ProtocolError(f"message of {message.length} bytes exceeds {MAX_MESSAGE_LEN}")
    try:
        header = HEADER.pack(message.length, int(message.msg_type), message.frame_id, message.sequence)
    except struct.error as exc:
        raise ProtocolError(f"header field out of range: {exc}") from exc
    return header + bytes(message.payload)


def _message_type(code: int) -> MessageType:
    try:
        return MessageType(code)
    except ValueError:
        raise ProtocolError(f"unknown message type 0x{code:02X}") from None


def decode_message(data: bytes) -> WireMessage:
    """
    Parse exactly one message

    Raises:
        ProtocolError: On truncation, trailing bytes or an unknown type
    """
    if len(data) < HEADER.size:
        raise ProtocolError(f"truncated header: {len(data)} of {HEADER.size} bytes")
    length, code, frame_id, sequence = HEADER.unpack_from(data)
    if length < HEADER_BODY_LEN:
        raise ProtocolError(f"length field {length} shorter than the header")
    total = LENGTH.size + length
    if len(data) < total:
        raise ProtocolError(f"truncated payload: {len(data) - HEADER.size} of {length - HEADER_BODY_LEN} bytes")
    if len(data) > total:
        raise ProtocolError(f"{len(data) - total} trailing bytes after message")
    return WireMessage(_message_type(code), frame_id, sequence, bytes(data[HEADER.size:total]))


class MessageEncoder:
    """Assigns sequence numbers to one direction of the channel."""

    def __init__(self, start: int = 0):
        self.next_sequence = start

    def encode(self, msg_type: MessageType, frame_id: int, payload: bytes = b"") -> bytes:
        message = WireMessage(MessageType(msg_type), frame_id, self.next_sequence, payload)
        data = encode_message(message)
        self.next_sequence += 1
        return data


class MessageDecoder:
    """
    Incremental decoder for one direction of the byte stream

    Usage:
        decoder = MessageDecoder()
        for message in decoder.feed(chunk):
            ...

    Raises ProtocolError when a sequence number does not increase.
    """

    def __init__(self):
        self._buffer = bytearray()
        self.last_sequence: Optional[int] = None

    @property
    def pending(self) -> int:
        return len(self._buffer)

    def check_sequence(self, message: WireMessage) -> WireMessage:
        if self.last_sequence is not None and message.sequence <= self.last_sequence:
            raise ProtocolError(
                f"sequence regression: {message.sequence} after {self.last_sequence}"
            )
        self.last_sequence = message.sequence
        return message

    def feed(self, data: bytes) -> List[WireMessage]:
        self._buffer.extend(data)
        messages = []
        while len(self._buffer) >= LENGTH.size:
            (length,) = LENGTH.unpack_from(self._buffer)
            if length < HEADER_BODY_LEN or length > MAX_MESSAGE_LEN:
                raise ProtocolError(f"invalid length field {length}")
            total = LENGTH.size + length
            if len(self._buffer) < total:
                break
            raw = bytes(self._buffer[:total])
            del self._buffer[:total]
            messages.append(self.check_sequence(decode_message(raw)))
        return messages
