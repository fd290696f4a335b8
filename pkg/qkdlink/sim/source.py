"""
Single-Photon Source and State Encoder

Each trigger of the encoder modulates `burst_len` consecutive pulses with
BB84 states. Randomness is drawn per burst from a generator keyed by
(seed, burst index), so any window of the pulse train can be regenerated
independently of how the run is chunked.

Note: basis and bit choices come from a seeded PRNG. This lets both sides
of a simulated link regenerate Alice's sequence, and it is a simulation
convenience only; a deployed encoder needs a true random source.
"""

from __future__ import annotations

from typing import Tuple, Union

import numpy as np

from qkdlink.sim.params import SystemParams
from qkdlink.sim.records import PulseTrain
from qkdlink.utils.validators import validate_count, validate_fraction


SeedLike = Union[int, np.random.SeedSequence, np.random.Generator]

# Stream tags keep the independent random streams of one run apart.
STREAM_SOURCE = 0x50
STREAM_CHANNEL = 0x43
STREAM_DRIFT = 0x44
STREAM_SCAN = 0x5C
STREAM_SAMPLE = 0x53


def derive_seed(rng_seed: int, *key: int) -> np.random.SeedSequence:
    """SeedSequence for a named sub-stream of a run."""
    return np.random.SeedSequence([int(rng_seed) & 0xFFFFFFFFFFFFFFFF, *[int(k) for k in key]])


def encode_burst(rng_seed: SeedLike, burst_len: int, basis_ratio: float = 0.5) -> Tuple[np.ndarray, np.ndarray]:
    """
    Draw one burst of (basis, bit) choices

    Args:
        rng_seed: Integer seed, SeedSequence, or an existing Generator
        burst_len: Number of pulses modulated by this trigger
        basis_ratio: Probability of the X basis

    Returns:
        (basis, bit) uint8 arrays of length burst_len; basis 0 = X, 1 = Z
    """
    validate_count("burst_len", burst_len, minimum=1)
    validate_fraction("basis_ratio", basis_ratio, open_low=True, open_high=True)

    rng = np.random.default_rng(rng_seed)
    basis = (rng.random(burst_len) >= basis_ratio).astype(np.uint8)
    bit = rng.integers(0, 2, size=burst_len, dtype=np.uint8)
    return basis, bit


def emit_pulses(params: SystemParams, n_pulses: int, rng_seed: int, start_index: int = 0) -> PulseTrain:
    """
    Emit a window of the pulse train

    Per pulse, P(photon_count ≥ 1) = η with η = η_S·η_E, and
    P(photon_count = 2) = g²·η²/2. Higher photon numbers are truncated.

    Args:
        params: System parameters
        n_pulses: Number of pulses in the window
        rng_seed: Run seed
        start_index: Absolute index of the first pulse

    Returns:
        PulseTrain for pulses [start_index, start_index + n_pulses)
    """
    validate_count("n_pulses", n_pulses, minimum=1)
    validate_count("start_index", start_index, minimum=0)

    burst_len = params.burst_len
    eta = params.eta_channel_input
    p_two = params.two_photon_probability

    first_burst = start_index // burst_len
    last_burst = (start_index + n_pulses - 1) // burst_len
    n_bursts = last_burst - first_burst + 1

    basis = np.empty(n_bursts * burst_len, dtype=np.uint8)
    bit = np.empty_like(basis)
    uniform = np.empty(n_bursts * burst_len, dtype=np.float64)

    for k in range(n_bursts):
        rng = np.random.default_rng(derive_seed(rng_seed, STREAM_SOURCE, first_burst + k))
        sl = slice(k * burst_len, (k + 1) * burst_len)
        basis[sl], bit[sl] = encode_burst(rng, burst_len, params.basis_ratio)
        uniform[sl] = rng.random(burst_len)

    offset = start_index - first_burst * burst_len
    window = slice(offset, offset + n_pulses)
    u = uniform[window]

    photon_count = np.zeros(n_pulses, dtype=np.uint8)
    photon_count[u < eta] = 1
    photon_count[u < p_two] = 2

    pulse_index = np.arange(start_index, start_index + n_pulses, dtype=np.int64)
    return PulseTrain(
        pulse_index=pulse_index,
        basis=basis[window].copy(),
        bit=bit[window].copy(),
        photon_count=photon_count,
        timestamp_s=pulse_index * params.pulse_period_s,
    )


def estimate_g2(pulses: PulseTrain) -> Tuple[float, float]:
    """
    Estimate g²(0) from emitted photon numbers

    g² = 2·P(2)/P(≥1)², with a Poisson standard error from the two-photon count.

    Returns:
        (g2, standard_error); (0.0, 0.0) when no pulse carried a photon
    """
    n = len(pulses)
    counts = np.bincount(pulses.photon_count, minlength=3)
    n_any = int(counts[1] + counts[2])
    n_two = int(counts[2])
    if n_any == 0:
        return 0.0, 0.0

    p_any = n_any / n
    g2 = 2.0 * (n_two / n) / p_any ** 2
    err = g2 / np.sqrt(n_two) if n_two else 2.0 / (n * p_any ** 2)
    return float(g2), float(err)
