"""
Channel and Receiver

Photons cross the fiber and the passive BB84 receiver: a 50:50 splitter
chooses the measurement basis, a PBS in each arm routes to one of four
detectors. Dark counts are folded into the pulse slots; dead time and the
temporal acceptance gate are applied per detector afterwards.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from qkdlink.sim.drift import DriftState
from qkdlink.sim.params import NUM_DETECTORS, SystemParams
from qkdlink.sim.records import ClickTrain, PulseTrain
from qkdlink.sim.source import STREAM_CHANNEL, derive_seed


def _signal_clicks(pulses: PulseTrain, params: SystemParams, error_prob: float, rng: np.random.Generator):
    """Per-photon survival, basis choice and detector outcome for photon-carrying pulses."""
    carrying = np.flatnonzero(pulses.photon_count > 0)
    count = pulses.photon_count[carrying]
    rows = carrying.size

    # fixed number of draws per row keeps the stream independent of outcomes
    survive = rng.random((rows, 2)) < params.eta_channel * params.eta_receiver
    survive[:, 1] &= count == 2
    bob_basis = rng.integers(0, 2, size=(rows, 2), dtype=np.uint8)
    flip = rng.random((rows, 2)) < error_prob
    guess = rng.integers(0, 2, size=(rows, 2), dtype=np.uint8)
    jitter = rng.normal(0.0, params.jitter_s, size=(rows, 2)) if params.jitter_s > 0 else np.zeros((rows, 2))

    alice_basis = pulses.basis[carrying][:, None]
    alice_bit = pulses.bit[carrying][:, None]
    matched = bob_basis == alice_basis
    bob_bit = np.where(matched, alice_bit ^ flip.astype(np.uint8), guess)

    accepted = survive & (np.abs(jitter) <= params.temporal_window_s / 2.0)
    row, slot = np.nonzero(accepted)

    local = carrying[row]
    return (
        pulses.pulse_index[local],
        (2 * bob_basis[row, slot] + bob_bit[row, slot]).astype(np.uint8),
        pulses.timestamp_s[local] + jitter[row, slot],
    )


def _dark_clicks(pulses: PulseTrain, params: SystemParams, rng: np.random.Generator):
    """
    Dark counts folded into pulse slots.

    Candidates are drawn over the full slot period with a uniform offset and
    kept when the offset lies inside the acceptance gate, so a narrower gate
    only ever removes dark counts for the same seed.
    """
    n = len(pulses)
    period = params.pulse_period_s
    expected = NUM_DETECTORS * n * params.dark_count_hz * period
    n_candidates = int(rng.poisson(expected)) if expected > 0 else 0

    slots = rng.integers(0, n, size=n_candidates)
    detectors = rng.integers(0, NUM_DETECTORS, size=n_candidates).astype(np.uint8)
    offsets = rng.uniform(-period / 2.0, period / 2.0, size=n_candidates)

    keep = np.abs(offsets) <= params.temporal_window_s / 2.0
    slots, detectors, offsets = slots[keep], detectors[keep], offsets[keep]
    return (
        pulses.pulse_index[slots],
        detectors,
        pulses.timestamp_s[slots] + offsets,
    )


def _apply_dead_time(detector: np.ndarray, times: np.ndarray, dead_time_s: float, last_click_s: np.ndarray):
    """
    Greedy per-detector dead time: a click registers only if at least
    dead_time_s has passed since that detector's previous registered click.

    Returns (keep mask, updated last_click_s). Inputs must be time-sorted.
    """
    keep = np.ones(times.size, dtype=bool)
    last = last_click_s.astype(np.float64).copy()

    if dead_time_s <= 0.0:
        for d in range(NUM_DETECTORS):
            hits = times[detector == d]
            if hits.size:
                last[d] = max(last[d], hits[-1])
        return keep, last

    det_list = detector.tolist()
    for i, t in enumerate(times.tolist()):
        d = det_list[i]
        if t - last[d] >= dead_time_s:
            last[d] = t
        else:
            keep[i] = False
    return keep, last


def transmit_and_detect(
    pulses: PulseTrain,
    params: SystemParams,
    drift: DriftState,
    rng_seed: int,
    last_click_s: Optional[np.ndarray] = None,
) -> ClickTrain:
    """
    Send a window of pulses through the channel and the receiver

    Each photon survives with probability η_QC·η_R and picks a basis arm
    with probability 1/2. In the matched basis the wrong detector fires with
    the intrinsic misalignment QBER plus the drift contribution; in the other
    basis the outcome is random.

    Args:
        pulses: Emitted pulses
        params: System parameters
        drift: Current polarization drift state
        rng_seed: Run seed; the stream is keyed by the window's first pulse
        last_click_s: Per-detector last registered click time from the previous window

    Returns:
        ClickTrain sorted by (pulse_index, detector_id)
    """
    if last_click_s is None:
        last_click_s = np.full(NUM_DETECTORS, -np.inf)
    if len(pulses) == 0:
        return ClickTrain.empty(last_click_s)

    sig_seq, dark_seq = derive_seed(rng_seed, STREAM_CHANNEL, pulses.start_index).spawn(2)
    error_prob = drift.error_probability(params.misalignment_qber)

    s_idx, s_det, s_time = _signal_clicks(pulses, params, error_prob, np.random.default_rng(sig_seq))
    d_idx, d_det, d_time = _dark_clicks(pulses, params, np.random.default_rng(dark_seq))

    pulse_index = np.concatenate([s_idx, d_idx]).astype(np.int64)
    detector = np.concatenate([s_det, d_det]).astype(np.uint8)
    times = np.concatenate([s_time, d_time])
    is_dark = np.concatenate([np.zeros(s_idx.size, bool), np.ones(d_idx.size, bool)])

    order = np.lexsort((is_dark, times))
    pulse_index, detector, times, is_dark = pulse_index[order], detector[order], times[order], is_dark[order]

    keep, last = _apply_dead_time(detector, times, params.dead_time_s, last_click_s)
    pulse_index, detector, times, is_dark = pulse_index[keep], detector[keep], times[keep], is_dark[keep]

    # one registered click per (slot, detector)
    order = np.lexsort((times, detector, pulse_index))
    pulse_index, detector, times, is_dark = pulse_index[order], detector[order], times[order], is_dark[order]
    if pulse_index.size:
        first = np.ones(pulse_index.size, dtype=bool)
        first[1:] = (pulse_index[1:] != pulse_index[:-1]) | (detector[1:] != detector[:-1])
        pulse_index, detector, times, is_dark = pulse_index[first], detector[first], times[first], is_dark[first]

    return ClickTrain(
        pulse_index=pulse_index,
        detector_id=detector,
        timestamp_s=times,
        is_dark=is_dark,
        scan=np.full(pulse_index.size, drift.scanning, dtype=bool),
        last_click_s=last,
    )
