"""
Information Reconciliation

Alice sends one syndrome of her key block; Bob decodes his noisy copy
against it. A failed decode is retried once at a lower target rate with a
fresh syndrome; the leakage of both attempts is counted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Tuple

import numpy as np

from qkdlink.exceptions import DecodeFailure, ParameterError
from qkdlink.ldpc.adapt import (
    DEFAULT_EFFICIENCY,
    RETRY_RATE_STEP,
    CodeSet,
    RateAdaptConfig,
    select_rate,
)
from qkdlink.ldpc.decoder import DEFAULT_MAX_ITERS, DecodeResult, decode
from qkdlink.security.bounds import binary_entropy
from qkdlink.sim.source import derive_seed
from qkdlink.utils.logger import logger
from qkdlink.utils.validators import validate_bits, validate_count

STREAM_PUNCTURE = 0x70
STREAM_SHORTEN = 0x73
# LLRs need q > 0 even for an error-free sample.
MIN_CHANNEL_QBER = 1e-3


@dataclass
class SyndromeMessage:
    """What Alice discloses for one attempt."""

    attempt: int
    rate: float
    syndrome: np.ndarray
    config: RateAdaptConfig

    @property
    def leakage(self) -> int:
        return self.config.leakage


@dataclass
class ReconcileOutcome:
    """
    Result of reconciling one frame

    Attributes:
        bits: Bob's corrected key (None on failure)
        converged: Final attempt converged
        attempts: Syndromes sent
        iterations: BP iterations per attempt
        leak_ec: Σ leakage over attempts
        n: Key bits
        qber: QBER the rates were chosen for
    """

    bits: Optional[np.ndarray]
    converged: bool
    attempts: List[SyndromeMessage] = field(default_factory=list)
    iterations: List[int] = field(default_factory=list)
    leak_ec: int = 0
    n: int = 0
    qber: float = 0.0

    @property
    def efficiency(self) -> float:
        """f = leak_EC / (n·H(q))"""
        h = binary_entropy(self.qber)
        return self.leak_ec / (self.n * h) if h > 0 else float("inf")


class Reconciler:
    """
    Syndrome-based reconciliation with one fallback

    Usage:
        rec = Reconciler(CodeSet(frame_len=10_000))
        msg = rec.alice_syndrome(alice_key, q, frame_seed, attempt=0)      # Alice
        result, _ = rec.bob_decode(bob_key, msg.syndrome, q, frame_seed)   # Bob
    """

    def __init__(
        self,
        code_set: CodeSet,
        f_target: float = DEFAULT_EFFICIENCY,
        max_iters: int = DEFAULT_MAX_ITERS,
        retry_step: float = RETRY_RATE_STEP,
        max_attempts: int = 2,
    ):
        self.code_set = code_set
        self.f_target = f_target
        self.max_iters = validate_count("max_iters", max_iters, minimum=1)
        self.retry_step = retry_step
        self.max_attempts = validate_count("max_attempts", max_attempts, minimum=1)

    @property
    def frame_len(self) -> int:
        return self.code_set.frame_len

    def plan(self, q: float, frame_seed: int, attempt: int = 0):
        """Base code and positions for an attempt; identical on both sides."""
        return select_rate(
            q,
            self.code_set,
            f_target=self.f_target,
            rate_offset=attempt * self.retry_step,
            position_seed=int(derive_seed(frame_seed, attempt).generate_state(1)[0]),
        )

    def shortened_values(self, config: RateAdaptConfig, frame_seed: int, attempt: int) -> np.ndarray:
        rng = np.random.default_rng(derive_seed(frame_seed, STREAM_SHORTEN, attempt))
        return rng.integers(0, 2, size=config.shortened.size, dtype=np.uint8)

    def _codeword(self, key_bits, config: RateAdaptConfig, fill: np.ndarray, short_values: np.ndarray) -> np.ndarray:
        word = np.zeros(config.block_len, dtype=np.uint8)
        word[config.key_positions()] = validate_bits("key_bits", key_bits, self.frame_len)
        word[config.punctured] = fill
        word[config.shortened] = short_values
        return word

    def alice_syndrome(self, key_bits, q: float, frame_seed: int, attempt: int = 0,
                       private_seed: Optional[int] = None) -> SyndromeMessage:
        """
        Alice's syndrome for one attempt

        Punctured positions carry random bits from private_seed (never
        disclosed); shortened positions carry public values from frame_seed.
        """
        code, config = self.plan(q, frame_seed, attempt)
        private = frame_seed if private_seed is None else private_seed
        rng = np.random.default_rng(derive_seed(private, STREAM_PUNCTURE, attempt))
        fill = rng.integers(0, 2, size=config.punctured.size, dtype=np.uint8)
        word = self._codeword(key_bits, config, fill, self.shortened_values(config, frame_seed, attempt))
        return SyndromeMessage(attempt=attempt, rate=code.design_rate, syndrome=code.syndrome(word), config=config)

    def bob_decode(self, noisy_bits, syndrome, q: float, frame_seed: int, attempt: int = 0,
                   rate: Optional[float] = None) -> Tuple[DecodeResult, RateAdaptConfig]:
        """
        Decode Bob's key against Alice's syndrome

        Args:
            noisy_bits: Bob's n key bits
            syndrome: Received syndrome
            q: QBER estimate both sides agreed on
            frame_seed: Public frame seed
            attempt: Attempt number the syndrome was sent for
            rate: Base rate announced with the syndrome, checked when given

        Returns:
            (DecodeResult whose bits are the corrected n key bits on success,
            the locally derived plan)

        Raises:
            ParameterError: If the received syndrome disagrees with the local plan
        """
        code, config = self.plan(q, frame_seed, attempt)
        syndrome = np.asarray(syndrome)
        if config.n_checks != syndrome.size or (rate is not None and code.design_rate != rate):
            raise ParameterError("syndrome does not match the locally derived code plan")

        short_values = self.shortened_values(config, frame_seed, attempt)
        word = self._codeword(noisy_bits, config, np.zeros(config.punctured.size, np.uint8), short_values)
        result = decode(
            code,
            word,
            syndrome,
            max(q, MIN_CHANNEL_QBER),
            max_iters=self.max_iters,
            punctured=config.punctured,
            shortened=config.shortened,
            shortened_values=short_values,
        )
        if result.converged:
            return DecodeResult(result.bits[config.key_positions()], True, result.iterations), config
        return result, config

    def reconcile(self, alice_bits, bob_bits, q: float, frame_seed: int = 0) -> ReconcileOutcome:
        """Run both sides locally, with the fallback attempt."""
        outcome = ReconcileOutcome(bits=None, converged=False, n=self.frame_len, qber=q)
        for attempt in range(self.max_attempts):
            message = self.alice_syndrome(alice_bits, q, frame_seed, attempt)
            result, _ = self.bob_decode(bob_bits, message.syndrome, q, frame_seed, attempt, message.rate)
            outcome.attempts.append(message)
            outcome.iterations.append(result.iterations)
            outcome.leak_ec += message.leakage
            if result.converged:
                outcome.bits = result.bits
                outcome.converged = True
                break
            logger.debug("reconcile_attempt_failed", attempt=attempt, rate=message.rate,
                         effective_rate=round(message.config.effective_rate, 4))
        return outcome

    def reconcile_or_raise(self, alice_bits, bob_bits, q: float, frame_seed: int = 0) -> ReconcileOutcome:
        outcome = self.reconcile(alice_bits, bob_bits, q, frame_seed)
        if not outcome.converged:
            raise DecodeFailure(f"no convergence after {len(outcome.attempts)} attempts",
                                iterations=sum(outcome.iterations))
        return outcome


@dataclass
class EfficiencyReport:
    efficiency: float
    frames: int
    converged: int
    failed: int
    mean_leak_ec: float

    @property
    def convergence_rate(self) -> float:
        return self.converged / self.frames if self.frames else 0.0


def measure_efficiency(runs: Iterable[ReconcileOutcome]) -> EfficiencyReport:
    """
    f = mean(leak_EC) / (n·H(q)) over converged frames; failures counted apart

    Raises:
        ParameterError: If no run converged or runs mix frame sizes or QBERs
    """
    runs = list(runs)
    good = [r for r in runs if r.converged]
    if not good:
        raise ParameterError("no converged frames to measure")
    if len({(r.n, r.qber) for r in good}) != 1:
        raise ParameterError("runs must share frame size and QBER")

    mean_leak = float(np.mean([r.leak_ec for r in good]))
    n, q = good[0].n, good[0].qber
    h = binary_entropy(q)
    if h <= 0:
        raise ParameterError("efficiency is undefined at zero QBER")
    return EfficiencyReport(
        efficiency=mean_leak / (n * h),
        frames=len(runs),
        converged=len(good),
        failed=len(runs) - len(good),
        mean_leak_ec=mean_leak,
    )
