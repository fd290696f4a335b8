"""
Unit tests for the classical channel: wire format, payloads, transports
and the message channel.
"""

import asyncio
import socket

import numpy as np
import pytest

from qkdlink.exceptions import ProtocolError, TransportClosed
from qkdlink.net.alerts import send_security_alarm
from qkdlink.net.payloads import (
    AckPayload,
    AckStatus,
    BasisKind,
    BitsAnnouncement,
    DetectionsPayload,
    SeedPayload,
    SyndromePayload,
    VerifyPayload,
    decode_abort,
    decode_sample,
    encode_abort,
    encode_sample,
    unpack_bits,
)
from qkdlink.net.transport import MemoryTransport, MessageChannel, TcpTransport
from qkdlink.net.wire import (
    MessageDecoder,
    MessageEncoder,
    MessageType,
    WireMessage,
    decode_message,
    encode_message,
)


GOLDEN = bytes.fromhex("00000013" "03" "0000000000000007" "0000000000000003" "ABCD")


def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


# =====================================================
# Wire format
# =====================================================

class TestWireFormat:

    def test_golden_vector(self):
        message = WireMessage(MessageType.SYNDROME, frame_id=7, sequence=3, payload=b"\xab\xcd")
        assert encode_message(message) == GOLDEN
        assert message.length == 19

    def test_decode_golden_vector(self):
        message = decode_message(GOLDEN)
        assert message.msg_type is MessageType.SYNDROME
        assert (message.frame_id, message.sequence, message.payload) == (7, 3, b"\xab\xcd")

    def test_type_codes(self):
        assert [int(t) for t in MessageType] == list(range(1, 9))

    def test_unknown_type_rejected(self):
        data = bytearray(GOLDEN)
        data[4] = 0xFF
        with pytest.raises(ProtocolError, match="0xFF"):
            decode_message(bytes(data))

    def test_truncated_header(self):
        with pytest.raises(ProtocolError):
            decode_message(GOLDEN[:10])

    def test_truncated_payload(self):
        with pytest.raises(ProtocolError):
            decode_message(GOLDEN[:-1])

    def test_trailing_bytes(self):
        with pytest.raises(ProtocolError):
            decode_message(GOLDEN + b"\x00")

    def test_short_length_field(self):
        data = b"\x00\x00\x00\x05" + GOLDEN[4:]
        with pytest.raises(ProtocolError):
            decode_message(data)

    def test_frame_id_out_of_range(self):
        with pytest.raises(ProtocolError):
            encode_message(WireMessage(MessageType.ABORT, frame_id=1 << 64, sequence=0))


class TestStreamDecoder:

    def test_split_feeds(self):
        encoder = MessageEncoder()
        stream = encoder.encode(MessageType.PA_SEED, 1, b"x") + encoder.encode(MessageType.AUTH_TAG, 1, b"yz")
        decoder = MessageDecoder()
        assert decoder.feed(stream[:5]) == []
        messages = decoder.feed(stream[5:])
        assert [m.msg_type for m in messages] == [MessageType.PA_SEED, MessageType.AUTH_TAG]
        assert [m.sequence for m in messages] == [0, 1]
        assert decoder.pending == 0

    def test_sequence_regression_rejected(self):
        first = encode_message(WireMessage(MessageType.FRAME_ACK, 0, 5))
        replay = encode_message(WireMessage(MessageType.FRAME_ACK, 0, 5))
        decoder = MessageDecoder()
        decoder.feed(first)
        with pytest.raises(ProtocolError, match="sequence"):
            decoder.feed(replay)

    def test_sequence_gaps_allowed(self):
        decoder = MessageDecoder()
        decoder.feed(encode_message(WireMessage(MessageType.FRAME_ACK, 0, 1)))
        assert len(decoder.feed(encode_message(WireMessage(MessageType.FRAME_ACK, 0, 9)))) == 1

    def test_invalid_length_rejected(self):
        with pytest.raises(ProtocolError):
            MessageDecoder().feed(b"\x00\x00\x00\x01\x00")


# =====================================================
# Payloads
# =====================================================

class TestPayloads:

    def test_detections(self):
        payload = DetectionsPayload(chunk_start=1 << 40, scanning=True, offsets=np.array([0, 5, 70_000]))
        back = DetectionsPayload.from_bytes(payload.to_bytes())
        assert back.scanning
        assert back.pulse_index.tolist() == [1 << 40, (1 << 40) + 5, (1 << 40) + 70_000]

    def test_detections_count_checked(self):
        data = DetectionsPayload(0, False, np.array([1, 2])).to_bytes()
        with pytest.raises(ProtocolError):
            DetectionsPayload.from_bytes(data[:-4])

    def test_bits_announcement_kind_checked(self):
        data = BitsAnnouncement(BasisKind.BASES, np.array([1, 0, 1])).to_bytes()
        assert BitsAnnouncement.from_bytes(data, BasisKind.BASES).bits.tolist() == [1, 0, 1]
        with pytest.raises(ProtocolError):
            BitsAnnouncement.from_bytes(data, BasisKind.MATCHES)

    def test_unknown_basis_kind(self):
        with pytest.raises(ProtocolError):
            BitsAnnouncement.from_bytes(b"\x09", BasisKind.BASES)

    def test_sample_bit_count_preserved(self):
        bits = np.array([1, 1, 0, 1, 0, 0, 0, 1, 1], dtype=np.uint8)
        data = encode_sample(bits)
        assert len(data) == 4 + 2
        assert decode_sample(data).tolist() == bits.tolist()

    def test_truncated_bits(self):
        with pytest.raises(ProtocolError):
            unpack_bits(b"\x00\x00\x00\x10\xff")

    def test_syndrome_layout(self):
        data = SyndromePayload(attempt=1, rate=0.7, syndrome=np.array([1, 0, 1, 1])).to_bytes()
        # attempt, rate, bit count, then the packed syndrome
        assert data[0] == 1
        assert data[9:13] == b"\x00\x00\x00\x04"
        assert data[13] == 0b10110000
        back = SyndromePayload.from_bytes(data)
        assert (back.attempt, back.rate) == (1, 0.7)

    def test_syndrome_trailing_bytes(self):
        data = SyndromePayload(0, 0.7, np.array([1])).to_bytes() + b"\x00"
        with pytest.raises(ProtocolError):
            SyndromePayload.from_bytes(data)

    def test_verify_payload_size(self):
        payload = VerifyPayload(key=bytes(range(16)), tag=(1 << 34) - 1)
        assert len(payload.to_bytes()) == 24
        assert VerifyPayload.from_bytes(payload.to_bytes()) == payload
        with pytest.raises(ProtocolError):
            VerifyPayload.from_bytes(b"\x00" * 23)

    def test_seed_payload(self):
        back = SeedPayload.from_bytes(SeedPayload(1000, 300, b"\x01\x02").to_bytes())
        assert (back.n, back.l_out, back.seed) == (1000, 300, b"\x01\x02")

    def test_ack_status(self):
        back = AckPayload.from_bytes(AckPayload(AckStatus.DISCARD_QBER).to_bytes())
        assert back.status is AckStatus.DISCARD_QBER
        with pytest.raises(ProtocolError):
            AckPayload.from_bytes(b"\x77")
        with pytest.raises(ProtocolError):
            AckPayload.from_bytes(b"")

    def test_abort_reason(self):
        assert decode_abort(encode_abort("authentication_failed")) == "authentication_failed"


# =====================================================
# Transports
# =====================================================

@pytest.mark.asyncio
class TestMemoryTransport:

    async def test_bytes_arrive_in_order(self):
        a, b = MemoryTransport.pair()
        await a.send(b"abc")
        await a.send(b"defg")
        assert await b.read_exactly(2) == b"ab"
        assert await b.read_exactly(5) == b"cdefg"
        assert a.bytes_sent == 7

    async def test_close_ends_peer_stream(self):
        a, b = MemoryTransport.pair()
        await a.send(b"xy")
        await a.close()
        with pytest.raises(TransportClosed):
            await b.read_exactly(3)

    async def test_send_after_close(self):
        a, _ = MemoryTransport.pair()
        await a.close()
        with pytest.raises(TransportClosed):
            await a.send(b"x")

    async def test_tamper_hook(self):
        a, b = MemoryTransport.pair(tamper_a_to_b=lambda data: data[::-1])
        await a.send(b"123")
        assert await b.read_exactly(3) == b"321"


@pytest.mark.asyncio
async def test_tcp_transport_exchange():
    port = _free_port()
    server_task = asyncio.create_task(TcpTransport.accept_one("127.0.0.1", port))
    client = await TcpTransport.connect("127.0.0.1", port)
    server = await server_task
    try:
        await client.send(b"hello")
        assert await server.read_exactly(5) == b"hello"
        await server.close()
        with pytest.raises(TransportClosed):
            await client.read_exactly(1)
    finally:
        await client.close()


@pytest.mark.asyncio
async def test_tcp_connect_gives_up():
    with pytest.raises(TransportClosed):
        await TcpTransport.connect("127.0.0.1", _free_port(), retries=2, delay_s=0.01)


@pytest.mark.asyncio
class TestMessageChannel:

    async def _pair(self):
        a, b = MemoryTransport.pair()
        return MessageChannel(a), MessageChannel(b)

    async def test_send_and_expect(self):
        alice, bob = await self._pair()
        await alice.send(MessageType.SYNDROME, 4, b"\x01")
        message = await bob.expect(MessageType.SYNDROME, 4)
        assert message.payload == b"\x01"
        assert message.sequence == 0

    async def test_unexpected_type(self):
        alice, bob = await self._pair()
        await alice.send(MessageType.PA_SEED, 4)
        with pytest.raises(ProtocolError, match="SYNDROME"):
            await bob.expect(MessageType.SYNDROME, 4)

    async def test_wrong_frame(self):
        alice, bob = await self._pair()
        await alice.send(MessageType.SYNDROME, 5)
        with pytest.raises(ProtocolError, match="frame"):
            await bob.expect(MessageType.SYNDROME, 4)

    async def test_abort_passes_through(self):
        alice, bob = await self._pair()
        await alice.send(MessageType.ABORT, 9, encode_abort("desynchronized"))
        message = await bob.expect(MessageType.SYNDROME, 4)
        assert message.msg_type is MessageType.ABORT

    async def test_transcripts_agree(self):
        alice, bob = await self._pair()
        await alice.send(MessageType.SAMPLE_DISCLOSE, 1, b"aa")
        await bob.receive()
        await bob.send(MessageType.SAMPLE_DISCLOSE, 1, b"bb")
        await alice.receive()
        assert alice.transcript() == bob.transcript()
        assert bob.transcript(exclude_last=1) == alice.transcript(exclude_last=1)

        alice.reset_transcript()
        assert alice.transcript() == b""

    async def test_tampered_length_rejected(self):
        a, b = MemoryTransport.pair(tamper_a_to_b=lambda data: b"\x00\x00\x00\x02" + data[4:])
        sender, receiver = MessageChannel(a), MessageChannel(b)
        await sender.send(MessageType.FRAME_ACK, 0, b"\x00")
        with pytest.raises(ProtocolError):
            await receiver.receive()


# =====================================================
# Alarms
# =====================================================

@pytest.mark.asyncio
class TestSecurityAlarm:

    async def test_no_webhook(self):
        assert await send_security_alarm(None, {"event": "authentication_failed"}) is False

    async def test_unreachable_webhook_is_silent(self):
        url = f"http://127.0.0.1:{_free_port()}/alarm"
        assert await send_security_alarm(url, {"event": "authentication_failed"}, timeout_s=1.0) is False
