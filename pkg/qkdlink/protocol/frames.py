"""
Frame Assembly

Sifted bits are buffered until n + m are available. The frame's m
estimation positions are drawn uniformly without replacement from a seed
both sides share; the remaining n bits form the key block. n counts key
bits after the sample is removed, so a frame consumes n + m sifted bits.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from qkdlink.exceptions import ParameterError
from qkdlink.protocol.estimation import estimate_qber, qber_upper_bound
from qkdlink.sim.records import RECORD_DTYPE, write_records
from qkdlink.sim.source import STREAM_SAMPLE, derive_seed
from qkdlink.utils.validators import validate_count, validate_fraction


DEFAULT_FRAME_SIZE = 200_000
DEFAULT_SAMPLE_FRACTION = 0.1

DISCARD_POLICIES = ("drop", "flag")


def sample_size(n: int, sample_fraction: float = DEFAULT_SAMPLE_FRACTION) -> int:
    """m = floor(sample_fraction · n)"""
    return int(math.floor(sample_fraction * n))


def draw_sample_positions(total: int, m: int, sample_seed: int, frame_id: int) -> np.ndarray:
    """Sorted positions of the estimation sample inside a buffer of `total` bits."""
    rng = np.random.default_rng(derive_seed(sample_seed, STREAM_SAMPLE, frame_id))
    return np.sort(rng.choice(total, size=m, replace=False))


@dataclass
class SiftedFrame:
    """
    One post-processing frame as seen by one side

    Attributes:
        frame_id: Frame number (1-based within a session)
        key_bits: n key bits
        est_sample_bits: m disclosed bits
        key_indices / sample_indices: Pulse slots the bits came from
        q_hat / q_tilde: Set once the other side's sample is known
        discard_flag: Frame carries bits taken during a compensation scan
    """

    frame_id: int
    key_bits: np.ndarray
    est_sample_bits: np.ndarray
    key_indices: np.ndarray
    sample_indices: np.ndarray
    q_hat: Optional[float] = None
    q_tilde: Optional[float] = None
    discard_flag: bool = False

    @property
    def n(self) -> int:
        return int(self.key_bits.size)

    @property
    def m(self) -> int:
        return int(self.est_sample_bits.size)

    def with_estimate(self, other_sample: np.ndarray, eps_pe: float) -> "SiftedFrame":
        """Copy with q̂ and q̃ computed against the peer's disclosed sample."""
        q_hat = estimate_qber(self.est_sample_bits, other_sample)
        return dataclasses.replace(self, q_hat=q_hat, q_tilde=qber_upper_bound(q_hat, self.m, eps_pe))

    def to_records(self, pulse_period_s: float = 0.0) -> np.ndarray:
        """Binary records in pulse order; flags bit0 marks sample members."""
        index = np.concatenate([self.key_indices, self.sample_indices])
        bits = np.concatenate([self.key_bits, self.est_sample_bits])
        flags = np.concatenate([np.zeros(self.n, np.uint8), np.ones(self.m, np.uint8)])
        order = np.argsort(index, kind="stable")

        out = np.empty(index.size, dtype=RECORD_DTYPE)
        out["pulse_index"] = index[order]
        out["flags"] = flags[order]
        out["code"] = bits[order]
        out["timestamp"] = index[order] * pulse_period_s
        return out


def write_frame_records(path: Union[str, Path], frame: SiftedFrame, pulse_period_s: float = 0.0) -> int:
    return write_records(path, frame.to_records(pulse_period_s))


class FrameAssembler:
    """
    Buffers sifted bits into frames

    Usage:
        asm = FrameAssembler(n=200_000)
        asm.add(result.pulse_index, result.alice_bits)
        while asm.ready:
            frame = asm.pop(frame_id, sample_seed)

    Bits added with discard=True are dropped before buffering (policy
    "drop") or buffered and flag their frame (policy "flag").
    """

    def __init__(self, n: int = DEFAULT_FRAME_SIZE, sample_fraction: float = DEFAULT_SAMPLE_FRACTION,
                 discard_policy: str = "drop"):
        self.n = validate_count("n", n, minimum=1)
        validate_fraction("sample_fraction", sample_fraction, open_high=True)
        if discard_policy not in DISCARD_POLICIES:
            raise ParameterError(f"discard_policy must be one of {DISCARD_POLICIES}, got {discard_policy!r}")
        self.m = sample_size(n, sample_fraction)
        self.discard_policy = discard_policy
        self._index = np.zeros(0, dtype=np.int64)
        self._bits = np.zeros(0, dtype=np.uint8)
        self._flag = np.zeros(0, dtype=bool)
        self.dropped = 0

    @property
    def frame_bits(self) -> int:
        return self.n + self.m

    @property
    def buffered(self) -> int:
        return int(self._bits.size)

    @property
    def ready(self) -> bool:
        return self.buffered >= self.frame_bits

    def add(self, pulse_index: np.ndarray, bits: np.ndarray, discard: bool = False) -> None:
        pulse_index = np.asarray(pulse_index, dtype=np.int64)
        bits = np.asarray(bits, dtype=np.uint8)
        if pulse_index.size != bits.size:
            raise ParameterError("pulse_index and bits differ in length")
        if discard and self.discard_policy == "drop":
            self.dropped += int(bits.size)
            return
        self._index = np.concatenate([self._index, pulse_index])
        self._bits = np.concatenate([self._bits, bits])
        self._flag = np.concatenate([self._flag, np.full(bits.size, discard)])

    def pop(self, frame_id: int, sample_seed: int) -> SiftedFrame:
        """
        Take the next n + m buffered bits as a frame

        Raises:
            ParameterError: If fewer than n + m bits are buffered
        """
        total = self.frame_bits
        if not self.ready:
            raise ParameterError(f"need {total} sifted bits, have {self.buffered}")

        index, bits, flag = self._index[:total], self._bits[:total], self._flag[:total]
        self._index, self._bits, self._flag = self._index[total:], self._bits[total:], self._flag[total:]

        in_sample = np.zeros(total, dtype=bool)
        in_sample[draw_sample_positions(total, self.m, sample_seed, frame_id)] = True
        return SiftedFrame(
            frame_id=frame_id,
            key_bits=bits[~in_sample].copy(),
            est_sample_bits=bits[in_sample].copy(),
            key_indices=index[~in_sample].copy(),
            sample_indices=index[in_sample].copy(),
            discard_flag=bool(flag.any()),
        )
