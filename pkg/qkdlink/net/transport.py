"""
Transports

A transport is a reliable, ordered, duplex byte stream. Implementations:
- TcpTransport (asyncio streams, for two processes)
- MemoryTransport (in-process pair, with a tamper hook for fault injection)

MessageChannel sits on top: it frames messages, numbers them, checks the
peer's sequence and keeps the per-frame transcript that the authentication
tags cover.
"""

from __future__ import annotations

import asyncio
from typing import Callable, List, Optional, Tuple

from qkdlink.exceptions import ProtocolError, TransportClosed
from qkdlink.net.wire import (
    HEADER_BODY_LEN,
    LENGTH,
    MAX_MESSAGE_LEN,
    MessageDecoder,
    MessageEncoder,
    MessageType,
    WireMessage,
    decode_message,
)
from qkdlink.utils.logger import logger

Tamper = Callable[[bytes], bytes]


class Transport:
    """
    Abstract byte-stream interface

    Implementations:
    - TcpTransport
    - MemoryTransport
    """

    async def send(self, data: bytes) -> None:
        raise NotImplementedError

    async def read_exactly(self, n: int) -> bytes:
        """Raises TransportClosed if the stream ends first."""
        raise NotImplementedError

    async def close(self) -> None:
        raise NotImplementedError


class _Pipe:
    """One direction of an in-memory stream."""

    def __init__(self):
        self._chunks: asyncio.Queue = asyncio.Queue()
        self._buffer = bytearray()
        self._eof = False

    def feed(self, data: bytes) -> None:
        self._chunks.put_nowait(bytes(data))

    def feed_eof(self) -> None:
        self._chunks.put_nowait(None)

    async def read_exactly(self, n: int) -> bytes:
        while len(self._buffer) < n:
            if self._eof:
                raise TransportClosed(f"stream closed with {len(self._buffer)} of {n} bytes read")
            chunk = await self._chunks.get()
            if chunk is None:
                self._eof = True
            else:
                self._buffer.extend(chunk)
        out = bytes(self._buffer[:n])
        del self._buffer[:n]
        return out


class MemoryTransport(Transport):
    """
    In-process transport endpoint

    Usage:
        alice, bob = MemoryTransport.pair()
        alice, bob = MemoryTransport.pair(tamper_a_to_b=flip_first_syndrome)

    The tamper hook sees each outgoing send() call (one whole message) and
    returns the bytes actually delivered.
    """

    def __init__(self, inbound: _Pipe, outbound: _Pipe, tamper: Optional[Tamper] = None):
        self._inbound = inbound
        self._outbound = outbound
        self.tamper = tamper
        self.closed = False
        self.bytes_sent = 0

    @classmethod
    def pair(cls, tamper_a_to_b: Optional[Tamper] = None,
             tamper_b_to_a: Optional[Tamper] = None) -> Tuple["MemoryTransport", "MemoryTransport"]:
        a_to_b, b_to_a = _Pipe(), _Pipe()
        return cls(b_to_a, a_to_b, tamper_a_to_b), cls(a_to_b, b_to_a, tamper_b_to_a)

    async def send(self, data: bytes) -> None:
        if self.closed:
            raise TransportClosed("send on a closed transport")
        if self.tamper is not None:
            data = self.tamper(data)
        self.bytes_sent += len(data)
        self._outbound.feed(data)

    async def read_exactly(self, n: int) -> bytes:
        return await self._inbound.read_exactly(n)

    async def close(self) -> None:
        if not self.closed:
            self.closed = True
            self._outbound.feed_eof()


class TcpTransport(Transport):
    """
    asyncio stream transport

    Usage:
        transport = await TcpTransport.connect("127.0.0.1", 7700)
        transport = await TcpTransport.accept_one("0.0.0.0", 7700)
    """

    def __init__(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        self.reader = reader
        self.writer = writer

    @classmethod
    async def connect(cls, host: str, port: int, retries: int = 50, delay_s: float = 0.1) -> "TcpTransport":
        """Connect, retrying while the peer is not yet listening."""
        for attempt in range(retries):
            try:
                reader, writer = await asyncio.open_connection(host, port)
                return cls(reader, writer)
            except OSError as exc:
                if attempt == retries - 1:
                    raise TransportClosed(f"cannot connect to {host}:{port}: {exc}") from exc
                await asyncio.sleep(delay_s)
        raise TransportClosed(f"cannot connect to {host}:{port}")

    @classmethod
    async def accept_one(cls, host: str, port: int) -> "TcpTransport":
        """Listen until one peer connects, then stop listening."""
        accepted: asyncio.Future = asyncio.get_running_loop().create_future()

        def on_connect(reader, writer):
            if not accepted.done():
                accepted.set_result((reader, writer))
            else:
                writer.close()

        server = await asyncio.start_server(on_connect, host, port)
        logger.info("transport_listening", host=host, port=port)
        try:
            reader, writer = await accepted
        finally:
            server.close()
            await server.wait_closed()
        return cls(reader, writer)

    async def send(self, data: bytes) -> None:
        try:
            self.writer.write(data)
            await self.writer.drain()
        except (ConnectionError, OSError) as exc:
            raise TransportClosed(f"send failed: {exc}") from exc

    async def read_exactly(self, n: int) -> bytes:
        try:
            return await self.reader.readexactly(n)
        except asyncio.IncompleteReadError as exc:
            raise TransportClosed(f"stream closed with {len(exc.partial)} of {n} bytes read") from exc
        except (ConnectionError, OSError) as exc:
            raise TransportClosed(f"receive failed: {exc}") from exc

    async def close(self) -> None:
        try:
            self.writer.close()
            await self.writer.wait_closed()
        except (ConnectionError, OSError):
            pass


class MessageChannel:
    """
    Framed, sequenced messages over a transport

    Every message sent or received is appended to the current frame
    transcript until `reset_transcript()`.
    """

    def __init__(self, transport: Transport):
        self.transport = transport
        self.encoder = MessageEncoder()
        self.decoder = MessageDecoder()
        self._transcript: List[bytes] = []
        self.messages_sent = 0
        self.messages_received = 0

    async def send(self, msg_type: MessageType, frame_id: int, payload: bytes = b"") -> None:
        data = self.encoder.encode(msg_type, frame_id, payload)
        await self.transport.send(data)
        self._transcript.append(data)
        self.messages_sent += 1

    async def receive(self) -> WireMessage:
        """
        Next message from the peer

        Raises:
            TransportClosed: If the stream ends
            ProtocolError: On a malformed or out-of-sequence message
        """
        prefix = await self.transport.read_exactly(LENGTH.size)
        (length,) = LENGTH.unpack(prefix)
        if length < HEADER_BODY_LEN or length > MAX_MESSAGE_LEN:
            raise ProtocolError(f"invalid length field {length}")
        data = prefix + await self.transport.read_exactly(length)
        message = self.decoder.check_sequence(decode_message(data))
        self._transcript.append(data)
        self.messages_received += 1
        return message

    async def expect(self, msg_type: MessageType, frame_id: int) -> WireMessage:
        """
        Receive a message of a given type for a given frame

        An ABORT from the peer is returned as is; the caller decides.
        """
        message = await self.receive()
        if message.msg_type == MessageType.ABORT:
            return message
        if message.msg_type != msg_type:
            raise ProtocolError(f"expected {msg_type.name}, got {message.msg_type.name}")
        if message.frame_id != frame_id:
            raise ProtocolError(f"expected frame {frame_id}, got frame {message.frame_id}")
        return message

    def transcript(self, exclude_last: int = 0) -> bytes:
        """Concatenated frame transcript, optionally without its last messages."""
        parts = self._transcript[:len(self._transcript) - exclude_last]
        return b"".join(parts)

    def reset_transcript(self) -> None:
        self._transcript = []

    async def close(self) -> None:
        await self.transport.close()
