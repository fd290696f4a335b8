"""
Key-Exchange Session

Alice and Bob run the same loop over the simulated link, each reading
only its own side (Alice the pulses, Bob the clicks), and talk over a
MessageChannel.

Handshake (frame 0):
    A→B FRAME_ACK(HELLO, config digest)   B→A FRAME_ACK(HELLO, digest) or ABORT

Sifting, per link chunk, tagged with the frame being filled:
    B→A BASIS_ANNOUNCE(DETECTIONS)  A→B BASIS_ANNOUNCE(BASES)  B→A BASIS_ANNOUNCE(MATCHES)

Per frame, once n + m sifted bits are buffered:
    A→B SAMPLE_DISCLOSE   B→A SAMPLE_DISCLOSE            both compute q̂, q̃
    [A→B FRAME_ACK(DISCARD_*)]                            scan flag or q̂ above range
    (A→B SYNDROME  B→A FRAME_ACK(DECODED|DECODE_FAILED)) ≤ max_attempts times
    A→B VERIFY_HASH   B→A FRAME_ACK(VERIFIED|VERIFY_MISMATCH)
    [A→B FRAME_ACK(DISCARD_NO_KEY)] or A→B PA_SEED
    A→B AUTH_TAG   B→A AUTH_TAG                           over the frame transcript
    A→B FRAME_ACK(DONE)                                   keys are committed

Any discard skips ahead to the AUTH_TAG exchange; every frame consumes
two tags from the ledger. Once a session has aborted, nothing but ABORT
is sent.
"""

from __future__ import annotations

import asyncio
import hashlib
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Dict, List, Optional, Tuple

import numpy as np
import structlog

from qkdlink.exceptions import (
    AuthenticationError,
    KeyMaterialExhausted,
    ParameterError,
    ProtocolError,
    QKDError,
    SessionAborted,
    SynchronizationError,
    TransportClosed,
)
from qkdlink.hashing.ledger import KeyLedger
from qkdlink.hashing.toeplitz import ToeplitzSeed, toeplitz_hash
from qkdlink.hashing.universal import AuthTag, VerifyKey, auth_check, auth_tag, verify_hash
from qkdlink.ldpc.adapt import MAX_SUPPORTED_QBER, CodeSet
from qkdlink.ldpc.peg import load_distribution_dir
from qkdlink.ldpc.reconcile import Reconciler
from qkdlink.ldpc.store import create_code_store
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
)
from qkdlink.net.report import (
    STATUS_DECODE,
    STATUS_NO_KEY,
    STATUS_OK,
    STATUS_QBER,
    STATUS_SCAN,
    STATUS_VERIFY,
    FrameLogRow,
    SessionReport,
)
from qkdlink.net.transport import MessageChannel, Transport
from qkdlink.net.wire import MessageType, WireMessage
from qkdlink.protocol.estimation import reconciliation_qber
from qkdlink.protocol.frames import FrameAssembler, SiftedFrame
from qkdlink.protocol.sifting import alice_bases_at, match_bases, squash_clicks
from qkdlink.security.bounds import finite_key_length, gllp_factor
from qkdlink.sim.link import LinkSimulator
from qkdlink.sim.source import derive_seed
from qkdlink.utils.config import ExperimentConfig
from qkdlink.utils.logger import logger

STREAM_FRAME = 0xF4

DISCARD_ACKS = {
    STATUS_SCAN: AckStatus.DISCARD_SCAN,
    STATUS_QBER: AckStatus.DISCARD_QBER,
    STATUS_NO_KEY: AckStatus.DISCARD_NO_KEY,
}


class Role(str, Enum):
    ALICE = "alice"
    BOB = "bob"


class FrameStage(IntEnum):
    SIFTING = 0
    ESTIMATED = 1
    RECONCILED = 2
    VERIFIED = 3
    AMPLIFIED = 4
    AUTHENTICATED = 5
    DISCARDED = 6


_TRANSITIONS = {
    FrameStage.SIFTING: {FrameStage.ESTIMATED},
    FrameStage.ESTIMATED: {FrameStage.RECONCILED, FrameStage.DISCARDED},
    FrameStage.RECONCILED: {FrameStage.VERIFIED, FrameStage.DISCARDED},
    FrameStage.VERIFIED: {FrameStage.AMPLIFIED, FrameStage.DISCARDED},
    FrameStage.AMPLIFIED: {FrameStage.AUTHENTICATED},
    FrameStage.AUTHENTICATED: set(),
    FrameStage.DISCARDED: set(),
}


@dataclass
class SessionState:
    """
    Pipeline stage of every frame, the auth ledger and the abort reason

    A frame reaches AMPLIFIED only through VERIFIED; keys are emitted only
    from AUTHENTICATED frames; an aborted session emits nothing further.
    """

    role: Role
    ledger: KeyLedger
    stages: Dict[int, FrameStage] = field(default_factory=dict)
    abort_reason: Optional[str] = None

    @property
    def aborted(self) -> bool:
        return self.abort_reason is not None

    def begin(self, frame_id: int) -> None:
        if frame_id in self.stages:
            raise ProtocolError(f"frame {frame_id} started twice")
        self.stages[frame_id] = FrameStage.SIFTING

    def advance(self, frame_id: int, stage: FrameStage) -> None:
        current = self.stages.get(frame_id)
        if current is None or stage not in _TRANSITIONS[current]:
            raise ProtocolError(f"frame {frame_id}: illegal transition {getattr(current, 'name', None)} → {stage.name}")
        self.stages[frame_id] = stage

    def abort(self, reason: str) -> None:
        if self.abort_reason is None:
            self.abort_reason = reason


@dataclass
class _FrameWork:
    """Per-frame scratch values shared by both roles."""

    frame: SiftedFrame
    status: Optional[str] = None
    key: Optional[np.ndarray] = None
    rate: float = float("nan")
    effective_rate: float = float("nan")
    attempts: int = 0
    leak_ec: int = 0
    amplified: Optional[np.ndarray] = None
    row: Optional[FrameLogRow] = None


def frame_seed(public_seed: int, frame_id: int) -> int:
    """Public per-frame seed for rate-adaptation positions and shortened values."""
    return int(derive_seed(public_seed, STREAM_FRAME, frame_id).generate_state(1, np.uint64)[0])


def build_code_set(config: ExperimentConfig) -> CodeSet:
    return CodeSet(
        frame_len=config.frame_size,
        seed=config.code_seed,
        delta=config.delta,
        store=create_code_store(config.code_dir),
        distributions=load_distribution_dir(config.distribution_dir),
    )


def build_ledger(config: ExperimentConfig) -> KeyLedger:
    if config.bootstrap_key_path is not None:
        return KeyLedger.from_file(config.bootstrap_key_path)
    return KeyLedger.bootstrap(KeyLedger.derive_bootstrap(config.bootstrap_seed))


class KeySession:
    """
    One side of a key-exchange session

    Usage:
        alice_t, bob_t = MemoryTransport.pair()
        alice = KeySession("alice", alice_t, config, code_set=codes)
        bob = KeySession("bob", bob_t, config, code_set=codes)
        a_report, b_report = await asyncio.gather(alice.run(), bob.run())
    """

    def __init__(
        self,
        role: str,
        transport: Transport,
        config: ExperimentConfig,
        code_set: Optional[CodeSet] = None,
        ledger: Optional[KeyLedger] = None,
        keep_keys: bool = True,
    ):
        self.role = Role(role)
        self.config = config
        self.channel = MessageChannel(transport)
        self.params = config.system_params()
        self.budget = config.security_budget().resolved(config.frame_size)
        self.A = gllp_factor(self.params.two_photon_probability, self.params.detector_efficiency)
        self.code_set = code_set if code_set is not None else build_code_set(config)
        if self.code_set.frame_len != config.frame_size:
            raise ParameterError(f"code set frame length {self.code_set.frame_len} != frame_size {config.frame_size}")
        self.reconciler = Reconciler(
            self.code_set,
            f_target=config.f_target,
            max_iters=config.max_iters,
            retry_step=config.retry_step,
            max_attempts=config.max_attempts,
        )
        self.state = SessionState(self.role, ledger if ledger is not None else build_ledger(config))
        self.assembler = FrameAssembler(config.frame_size, config.sample_fraction, config.discard_policy)
        self.simulator = LinkSimulator(
            self.params,
            config.seed,
            chunk_pulses=config.chunk_pulses,
            drift=config.drift_state(),
            compensation=config.compensation,
        )
        self.keep_keys = keep_keys
        self.keys: List[np.ndarray] = []
        self.report = SessionReport(role=self.role.value, config_digest=config.digest())
        self._key_hash = hashlib.sha256()
        self._transcript_hash = hashlib.sha256()
        self._chunks = 0
        self._frame_id = 0

    @property
    def is_alice(self) -> bool:
        return self.role is Role.ALICE

    # =====================================================
    # Messaging
    # =====================================================

    async def _send(self, msg_type: MessageType, frame_id: int, payload: bytes = b"") -> None:
        if self.state.aborted:
            raise SessionAborted(self.state.abort_reason, "send after abort")
        await self.channel.send(msg_type, frame_id, payload)

    async def _expect(self, msg_type: MessageType, frame_id: int) -> WireMessage:
        message = await self.channel.expect(msg_type, frame_id)
        if message.msg_type == MessageType.ABORT:
            reason = decode_abort(message.payload) or "peer_abort"
            self.state.abort(reason)
            raise SessionAborted(reason, "announced by peer")
        return message

    async def _send_ack(self, frame_id: int, status: AckStatus, body: bytes = b"") -> None:
        await self._send(MessageType.FRAME_ACK, frame_id, AckPayload(status, body).to_bytes())

    async def _expect_ack(self, frame_id: int, *allowed: AckStatus) -> AckPayload:
        ack = AckPayload.from_bytes((await self._expect(MessageType.FRAME_ACK, frame_id)).payload)
        if allowed and ack.status not in allowed:
            raise ProtocolError(f"unexpected ack {ack.status.name}, wanted one of {[a.name for a in allowed]}")
        return ack

    # =====================================================
    # Run loop
    # =====================================================

    async def run(self) -> SessionReport:
        """
        Run until config.frames frames are processed or the session aborts

        Never raises for protocol-level failures: they end in an aborted
        report whose abort_reason names the cause.
        """
        structlog.contextvars.bind_contextvars(role=self.role.value)
        try:
            await self._handshake()
            frame_id = 1
            while frame_id <= self.config.frames:
                if self.assembler.ready:
                    await self._process_frame(frame_id)
                    frame_id += 1
                elif self._chunks >= self.config.max_chunks:
                    logger.warning("chunk_limit_reached", chunks=self._chunks, frames=frame_id - 1)
                    break
                else:
                    await self._sift_chunk(frame_id)
        except SessionAborted as exc:
            self.state.abort(exc.reason)
        except TransportClosed as exc:
            await self._abort("transport_closed", str(exc), notify=False)
        except AuthenticationError as exc:
            logger.critical("authentication_failed", frame_id=self._frame_id, detail=str(exc))
            await self._abort("authentication_failed", str(exc))
            await send_security_alarm(self.config.alarm_webhook_url, {
                "event": "authentication_failed",
                "role": self.role.value,
                "frame_id": self._frame_id,
                "detail": str(exc),
            })
        except KeyMaterialExhausted as exc:
            await self._abort("key_exhausted", str(exc))
        except SynchronizationError as exc:
            await self._abort("desynchronized", str(exc))
        except (ProtocolError, ParameterError) as exc:
            await self._abort("protocol_error", str(exc))
        finally:
            await self.channel.close()
            structlog.contextvars.unbind_contextvars("role", "frame_id")

        return self._finish()

    async def _abort(self, reason: str, detail: str, notify: bool = True) -> None:
        if self.state.aborted:
            return
        self.state.abort(reason)
        logger.error("session_aborted", reason=reason, detail=detail)
        if notify:
            try:
                await self.channel.send(MessageType.ABORT, self._frame_id, encode_abort(reason))
            except QKDError:
                pass

    def _finish(self) -> SessionReport:
        report = self.report
        report.aborted = self.state.aborted
        report.abort_reason = self.state.abort_reason
        report.key_digest = self._key_hash.hexdigest()
        report.transcript_digest = self._transcript_hash.hexdigest()
        report.auth_bits_consumed = self.state.ledger.consumed
        report.auth_bits_replenished = self.state.ledger.replenished
        logger.info(
            "session_finished",
            role=self.role.value,
            frames=len(report.frames),
            secret_bits=report.secret_bits,
            aborted=report.aborted,
            reason=report.abort_reason,
        )
        return report

    async def _handshake(self) -> None:
        digest = bytes.fromhex(self.config.digest())
        if self.is_alice:
            await self._send_ack(0, AckStatus.HELLO, digest)
            ack = await self._expect_ack(0, AckStatus.HELLO)
        else:
            ack = await self._expect_ack(0, AckStatus.HELLO)
        if ack.body != digest:
            await self._abort("config_mismatch", "peer configuration digest differs")
            raise SessionAborted("config_mismatch")
        if not self.is_alice:
            await self._send_ack(0, AckStatus.HELLO, digest)
        logger.info("session_started", digest=digest.hex()[:16])

    # =====================================================
    # Sifting
    # =====================================================

    async def _sift_chunk(self, frame_id: int) -> None:
        chunk = await asyncio.to_thread(self.simulator.next_chunk)
        self._chunks += 1
        self.report.simulated_time_s += self.simulator.chunk_duration_s
        start = chunk.pulses.start_index

        if self.is_alice:
            det = DetectionsPayload.from_bytes(
                (await self._expect(MessageType.BASIS_ANNOUNCE, frame_id)).payload
            )
            if det.chunk_start != start:
                raise SynchronizationError(f"peer chunk starts at {det.chunk_start}, local at {start}")
            slots = det.pulse_index
            sent = alice_bases_at(chunk.pulses, slots)
            await self._send(MessageType.BASIS_ANNOUNCE, frame_id,
                             BitsAnnouncement(BasisKind.BASES, sent.basis).to_bytes())
            keep = BitsAnnouncement.from_bytes(
                (await self._expect(MessageType.BASIS_ANNOUNCE, frame_id)).payload, BasisKind.MATCHES
            ).bits.astype(bool)
            if keep.size != slots.size:
                raise ProtocolError(f"match mask covers {keep.size} of {slots.size} slots")
            self.assembler.add(slots[keep], sent.bit[keep], discard=det.scanning)
        else:
            det = squash_clicks(chunk.clicks, rng_seed=self.config.seed)
            await self._send(MessageType.BASIS_ANNOUNCE, frame_id,
                             DetectionsPayload(start, chunk.scanning, det.pulse_index - start).to_bytes())
            bases = BitsAnnouncement.from_bytes(
                (await self._expect(MessageType.BASIS_ANNOUNCE, frame_id)).payload, BasisKind.BASES
            ).bits
            keep = match_bases(det.basis, bases)
            await self._send(MessageType.BASIS_ANNOUNCE, frame_id,
                             BitsAnnouncement(BasisKind.MATCHES, keep.astype(np.uint8)).to_bytes())
            self.assembler.add(det.pulse_index[keep], det.bit[keep], discard=chunk.scanning)

    # =====================================================
    # Frame pipeline
    # =====================================================

    async def _process_frame(self, frame_id: int) -> None:
        self._frame_id = frame_id
        structlog.contextvars.bind_contextvars(frame_id=frame_id)
        self.state.begin(frame_id)
        work = _FrameWork(frame=self.assembler.pop(frame_id, self.config.public_seed))

        await self._exchange_sample(work)
        self.state.advance(frame_id, FrameStage.ESTIMATED)
        f_seed = frame_seed(self.config.public_seed, frame_id)

        if work.frame.discard_flag:
            work.status = STATUS_SCAN
        elif work.frame.q_hat > MAX_SUPPORTED_QBER:
            work.status = STATUS_QBER
        if work.status is not None:
            await self._announce_discard(work)
        else:
            await self._reconcile(work, f_seed)

        if work.status is None:
            self.state.advance(frame_id, FrameStage.RECONCILED)
            await self._verify(work)

        if work.status is None:
            self.state.advance(frame_id, FrameStage.VERIFIED)
            result = finite_key_length(
                work.frame.n,
                work.frame.q_tilde,
                work.leak_ec,
                self.budget.leak_ev,
                self.budget.nu_auth,
                self.A,
                self.budget,
                q_hat=work.frame.q_hat,
            )
            work.row = FrameLogRow.from_result(
                frame_id, STATUS_OK if result.l_key > 0 else STATUS_NO_KEY, work.frame.m,
                work.frame.q_hat, work.rate, work.effective_rate, work.attempts, result,
            )
            if result.l_key <= 0:
                work.status = STATUS_NO_KEY
                await self._announce_discard(work)
            else:
                await self._amplify(work, result.l_key + self.budget.nu_auth)
                self.state.advance(frame_id, FrameStage.AMPLIFIED)

        if work.status is not None and self.state.stages[frame_id] != FrameStage.DISCARDED:
            self.state.advance(frame_id, FrameStage.DISCARDED)

        await self._authenticate(frame_id)
        self._transcript_hash.update(self.channel.transcript())
        self.channel.reset_transcript()
        if self.is_alice:
            await self._send_ack(frame_id, AckStatus.DONE)
        else:
            await self._expect_ack(frame_id, AckStatus.DONE)
        self._commit(work)

    async def _exchange_sample(self, work: _FrameWork) -> None:
        frame = work.frame
        own = encode_sample(frame.est_sample_bits)
        if self.is_alice:
            await self._send(MessageType.SAMPLE_DISCLOSE, frame.frame_id, own)
            peer = decode_sample((await self._expect(MessageType.SAMPLE_DISCLOSE, frame.frame_id)).payload)
        else:
            peer = decode_sample((await self._expect(MessageType.SAMPLE_DISCLOSE, frame.frame_id)).payload)
            await self._send(MessageType.SAMPLE_DISCLOSE, frame.frame_id, own)
        if peer.size != frame.m:
            raise ProtocolError(f"peer disclosed {peer.size} sample bits, expected {frame.m}")
        work.frame = frame.with_estimate(peer, self.budget.eps_pe)

    async def _announce_discard(self, work: _FrameWork) -> None:
        """Alice states the discard; Bob reached the same decision and checks it."""
        status = DISCARD_ACKS[work.status]
        if self.is_alice:
            await self._send_ack(work.frame.frame_id, status)
        else:
            await self._expect_ack(work.frame.frame_id, status)

    async def _reconcile(self, work: _FrameWork, f_seed: int) -> None:
        frame = work.frame
        # both sides hold the same q_hat, so they plan the same rates
        q_plan = min(reconciliation_qber(frame.q_hat, frame.m), MAX_SUPPORTED_QBER)
        private_seed = int(derive_seed(self.config.alice_seed, frame.frame_id).generate_state(1, np.uint64)[0])
        for attempt in range(self.reconciler.max_attempts):
            work.attempts = attempt + 1
            if self.is_alice:
                message = await asyncio.to_thread(
                    self.reconciler.alice_syndrome, frame.key_bits, q_plan, f_seed, attempt, private_seed
                )
                work.rate, work.effective_rate = message.rate, message.config.effective_rate
                work.leak_ec += message.leakage
                await self._send(MessageType.SYNDROME, frame.frame_id,
                                 SyndromePayload(attempt, message.rate, message.syndrome).to_bytes())
                ack = await self._expect_ack(frame.frame_id, AckStatus.DECODED, AckStatus.DECODE_FAILED)
                if ack.status == AckStatus.DECODED:
                    work.key = frame.key_bits
                    return
            else:
                payload = SyndromePayload.from_bytes((await self._expect(MessageType.SYNDROME, frame.frame_id)).payload)
                if payload.attempt != attempt:
                    raise ProtocolError(f"syndrome for attempt {payload.attempt}, expected {attempt}")
                try:
                    result, plan = await asyncio.to_thread(
                        self.reconciler.bob_decode, frame.key_bits, payload.syndrome, q_plan,
                        f_seed, attempt, payload.rate,
                    )
                except ParameterError as exc:
                    logger.warning("syndrome_rejected", attempt=attempt, detail=str(exc))
                    result, plan = None, self.reconciler.plan(q_plan, f_seed, attempt)[1]
                work.rate, work.effective_rate = payload.rate, plan.effective_rate
                work.leak_ec += plan.leakage
                if result is not None and result.converged:
                    work.key = result.bits
                    await self._send_ack(frame.frame_id, AckStatus.DECODED)
                    return
                await self._send_ack(frame.frame_id, AckStatus.DECODE_FAILED)
        work.status = STATUS_DECODE

    async def _verify(self, work: _FrameWork) -> None:
        frame_id = work.frame.frame_id
        if self.is_alice:
            key = VerifyKey.generate(self.config.alice_seed, frame_id)
            tag = verify_hash(work.key, key)
            await self._send(MessageType.VERIFY_HASH, frame_id, VerifyPayload(key.to_bytes(), tag).to_bytes())
            ack = await self._expect_ack(frame_id, AckStatus.VERIFIED, AckStatus.VERIFY_MISMATCH)
            matched = ack.status == AckStatus.VERIFIED
        else:
            payload = VerifyPayload.from_bytes((await self._expect(MessageType.VERIFY_HASH, frame_id)).payload)
            matched = verify_hash(work.key, VerifyKey.from_bytes(payload.key)) == payload.tag
            await self._send_ack(frame_id, AckStatus.VERIFIED if matched else AckStatus.VERIFY_MISMATCH)
        if not matched:
            work.status = STATUS_VERIFY
            logger.warning("verification_mismatch")

    async def _amplify(self, work: _FrameWork, out_len: int) -> None:
        frame_id, n = work.frame.frame_id, work.frame.n
        if self.is_alice:
            seed = ToeplitzSeed.generate(n, out_len, self.config.alice_seed, frame_id)
            await self._send(MessageType.PA_SEED, frame_id, SeedPayload(n, out_len, seed.to_bytes()).to_bytes())
        else:
            payload = SeedPayload.from_bytes((await self._expect(MessageType.PA_SEED, frame_id)).payload)
            if (payload.n, payload.l_out) != (n, out_len):
                raise ProtocolError(f"PA seed for {payload.l_out}×{payload.n}, expected {out_len}×{n}")
            seed = ToeplitzSeed.from_bytes(payload.seed, n, out_len, frame_id)
        work.amplified = await asyncio.to_thread(toeplitz_hash, work.key, seed)

    async def _authenticate(self, frame_id: int) -> None:
        """
        Exchange Wegman-Carter tags over the frame transcript

        Alice's tag covers the transcript so far; Bob's tag also covers
        Alice's AUTH_TAG message.
        """
        tag_bits = self.budget.tag_auth_bits
        if self.is_alice:
            tag = auth_tag(self.channel.transcript(), self.state.ledger.next_auth_key(tag_bits))
            await self._send(MessageType.AUTH_TAG, frame_id, tag.to_bytes())
            message = await self._expect(MessageType.AUTH_TAG, frame_id)
            self._check_tag(message, self.state.ledger.next_auth_key(tag_bits), tag_bits, "bob")
        else:
            message = await self._expect(MessageType.AUTH_TAG, frame_id)
            self._check_tag(message, self.state.ledger.next_auth_key(tag_bits), tag_bits, "alice")
            tag = auth_tag(self.channel.transcript(), self.state.ledger.next_auth_key(tag_bits))
            await self._send(MessageType.AUTH_TAG, frame_id, tag.to_bytes())
        self.report.nu_auth_total += self.budget.nu_auth

    def _check_tag(self, message: WireMessage, key, tag_bits: int, sender: str) -> None:
        try:
            tag = AuthTag.from_bytes(message.payload, tag_bits)
        except ParameterError as exc:
            raise AuthenticationError(f"malformed tag from {sender}: {exc}") from exc
        if not auth_check(self.channel.transcript(exclude_last=1), tag, key):
            raise AuthenticationError(f"tag from {sender} does not match the frame transcript")

    def _commit(self, work: _FrameWork) -> None:
        frame = work.frame
        frame_id = frame.frame_id
        if work.status is None:
            self.state.advance(frame_id, FrameStage.AUTHENTICATED)
            nu_auth = self.budget.nu_auth
            self.state.ledger.replenish(work.amplified[:nu_auth])
            secret = work.amplified[nu_auth:]
            self._key_hash.update(np.packbits(secret).tobytes())
            if self.keep_keys:
                self.keys.append(secret)
            self.report.secret_bits += int(secret.size)

        row = work.row
        if row is None or work.status not in (None, STATUS_NO_KEY):
            row = FrameLogRow(
                frame_id=frame_id,
                status=work.status,
                n=frame.n,
                m=frame.m,
                q_hat=frame.q_hat,
                q_tilde=frame.q_tilde,
                rate=work.rate,
                effective_rate=work.effective_rate,
                attempts=work.attempts,
                leak_ec=work.leak_ec,
            )
        self.report.frames.append(row)
        logger.info(
            "frame_complete",
            status=row.status,
            q_hat=round(frame.q_hat, 5),
            leak_ec=work.leak_ec,
            attempts=work.attempts,
            l_key=row.l_key,
        )


async def run_session(
    role: str,
    transport: Transport,
    config: ExperimentConfig,
    code_set: Optional[CodeSet] = None,
    ledger: Optional[KeyLedger] = None,
) -> SessionReport:
    """
    Run one role of a session over a transport

    Returns:
        SessionReport; `aborted` and `abort_reason` describe a failed session
    """
    return await KeySession(role, transport, config, code_set=code_set, ledger=ledger, keep_keys=False).run()


async def run_loopback(
    config: ExperimentConfig,
    code_set: Optional[CodeSet] = None,
    tamper_a_to_b=None,
    tamper_b_to_a=None,
) -> Tuple[KeySession, KeySession]:
    """Both roles in this process over a MemoryTransport pair; returns the finished sessions."""
    from qkdlink.net.transport import MemoryTransport

    codes = code_set if code_set is not None else build_code_set(config)
    a_transport, b_transport = MemoryTransport.pair(tamper_a_to_b, tamper_b_to_a)
    alice = KeySession(Role.ALICE.value, a_transport, config, code_set=codes)
    bob = KeySession(Role.BOB.value, b_transport, config, code_set=codes)
    await asyncio.gather(alice.run(), bob.run())
    return alice, bob
