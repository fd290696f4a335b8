"""
Sifting

Bob first squashes his clicks into at most one (basis, bit) per pulse slot,
then both sides keep the slots where Alice's and Bob's bases agree. The two
halves are separate functions so the session can run them on either side of
the wire; `sift` composes them locally.

Multi-click rule: if clicks land in both bases, the basis is chosen
uniformly at random; if both detectors of the chosen basis fired, the bit is
chosen uniformly at random.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from qkdlink.exceptions import SynchronizationError
from qkdlink.sim.records import ClickTrain, PulseTrain
from qkdlink.sim.source import derive_seed

STREAM_SQUASH = 0x51


@dataclass
class Detections:
    """Bob's squashed detections: one entry per clicked slot, in pulse order."""

    pulse_index: np.ndarray
    basis: np.ndarray
    bit: np.ndarray

    def __len__(self) -> int:
        return int(self.pulse_index.size)


@dataclass
class SiftResult:
    """Aligned raw key: matched slots with each side's bit."""

    pulse_index: np.ndarray
    alice_bits: np.ndarray
    bob_bits: np.ndarray

    def __len__(self) -> int:
        return int(self.pulse_index.size)

    @property
    def errors(self) -> int:
        return int(np.count_nonzero(self.alice_bits != self.bob_bits))


def squash_clicks(clicks: ClickTrain, rng_seed: int = 0) -> Detections:
    """
    Reduce clicks to one measurement per slot

    Raises:
        SynchronizationError: If clicks are not sorted by pulse index
    """
    idx = clicks.pulse_index
    if idx.size == 0:
        empty = np.zeros(0, dtype=np.uint8)
        return Detections(np.zeros(0, dtype=np.int64), empty, empty.copy())
    if np.any(np.diff(idx) < 0):
        raise SynchronizationError("clicks are not ordered by pulse index")

    slots, first, counts = np.unique(idx, return_index=True, return_counts=True)
    basis = clicks.basis[first].copy()
    bit = clicks.bit[first].copy()

    multi = np.flatnonzero(counts > 1)
    if multi.size:
        rng = np.random.default_rng(derive_seed(rng_seed, STREAM_SQUASH, int(slots[0])))
        draws = rng.integers(0, 2, size=(multi.size, 2))
        for k, j in enumerate(multi):
            dets = clicks.detector_id[first[j]:first[j] + counts[j]]
            bases = set(int(d) // 2 for d in dets)
            chosen = int(draws[k, 0]) if len(bases) == 2 else bases.pop()
            bits = sorted(set(int(d) % 2 for d in dets if int(d) // 2 == chosen))
            basis[j] = chosen
            bit[j] = bits[0] if len(bits) == 1 else int(draws[k, 1])

    return Detections(pulse_index=slots.astype(np.int64), basis=basis, bit=bit)


def match_bases(bob_basis: np.ndarray, alice_basis: np.ndarray) -> np.ndarray:
    """Boolean mask of detections where both sides used the same basis."""
    bob_basis = np.asarray(bob_basis)
    alice_basis = np.asarray(alice_basis)
    if bob_basis.shape != alice_basis.shape:
        raise SynchronizationError(
            f"basis lists differ in length ({bob_basis.size} vs {alice_basis.size})"
        )
    return bob_basis == alice_basis


def alice_bases_at(alice: PulseTrain, pulse_index: np.ndarray) -> PulseTrain:
    """
    Alice's records at Bob's detection slots

    Raises:
        SynchronizationError: If any slot lies outside Alice's pulse window
    """
    lo = alice.start_index
    hi = lo + len(alice)
    if pulse_index.size and (pulse_index.min() < lo or pulse_index.max() >= hi):
        raise SynchronizationError(
            f"click slots [{int(pulse_index.min())}, {int(pulse_index.max())}] "
            f"outside pulse window [{lo}, {hi})"
        )
    return alice.at(pulse_index)


def sift(alice_records: PulseTrain, bob_clicks: ClickTrain, rng_seed: int = 0) -> SiftResult:
    """
    Sift one window of records

    Args:
        alice_records: Alice's emitted pulses
        bob_clicks: Bob's registered clicks over the same pulse indexing
        rng_seed: Seed for multi-click resolution

    Returns:
        SiftResult in pulse order

    Raises:
        SynchronizationError: If the records do not share pulse indexing
    """
    det = squash_clicks(bob_clicks, rng_seed)
    sent = alice_bases_at(alice_records, det.pulse_index)
    keep = match_bases(det.basis, sent.basis)
    return SiftResult(
        pulse_index=det.pulse_index[keep],
        alice_bits=sent.bit[keep].astype(np.uint8),
        bob_bits=det.bit[keep].astype(np.uint8),
    )
