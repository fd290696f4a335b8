"""
Toeplitz Privacy Amplification

y = T·x over GF(2) with T[i][j] = seed[l − 1 − i + j] for an l×n matrix.
The product is a cross-correlation of the seed with x; it is evaluated with
a real FFT and reduced mod 2, which is bit-identical to the matrix product
as long as the integer sums stay far below 2^52.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz

from qkdlink.exceptions import ParameterError
from qkdlink.sim.source import derive_seed
from qkdlink.utils.validators import validate_bits, validate_count

STREAM_PA = 0x50A


@dataclass(frozen=True)
class ToeplitzSeed:
    """
    Seed of an l×n Toeplitz matrix, bound to one frame

    Attributes:
        bits: n + l − 1 seed bits
        n: Input length
        l_out: Output length
        frame_id: Frame the seed was drawn for
    """

    bits: np.ndarray
    n: int
    l_out: int
    frame_id: int = 0

    def __post_init__(self):
        validate_count("n", self.n, minimum=1)
        validate_count("l_out", self.l_out, minimum=0)
        if self.l_out > self.n:
            raise ParameterError(f"output length {self.l_out} exceeds input length {self.n}")
        expected = self.n + self.l_out - 1 if self.l_out else 0
        object.__setattr__(self, "bits", validate_bits("seed", self.bits, expected))

    @classmethod
    def generate(cls, n: int, l_out: int, rng_seed: int, frame_id: int = 0) -> "ToeplitzSeed":
        """Fresh uniform seed for one frame."""
        length = n + l_out - 1 if l_out else 0
        rng = np.random.default_rng(derive_seed(rng_seed, STREAM_PA, frame_id))
        return cls(rng.integers(0, 2, size=length, dtype=np.uint8), n, l_out, frame_id)

    def to_bytes(self) -> bytes:
        return np.packbits(self.bits).tobytes()

    @classmethod
    def from_bytes(cls, data: bytes, n: int, l_out: int, frame_id: int = 0) -> "ToeplitzSeed":
        length = n + l_out - 1 if l_out else 0
        if len(data) != (length + 7) // 8:
            raise ParameterError(f"seed needs {(length + 7) // 8} bytes, got {len(data)}")
        bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), count=length)
        return cls(bits, n, l_out, frame_id)


def toeplitz_hash(bits, seed: ToeplitzSeed, out_len: int = None) -> np.ndarray:
    """
    Compress n input bits to l_out output bits

    Args:
        bits: Reconciled key bits (length seed.n)
        seed: Toeplitz seed
        out_len: Optional check against seed.l_out

    Returns:
        uint8 array of length l_out

    Raises:
        ParameterError: On any length mismatch
    """
    x = validate_bits("bits", bits, seed.n)
    l_out = seed.l_out if out_len is None else out_len
    if l_out != seed.l_out:
        raise ParameterError(f"seed was drawn for {seed.l_out} output bits, asked for {l_out}")
    if l_out == 0:
        return np.zeros(0, dtype=np.uint8)

    n = seed.n
    total = n + l_out - 1
    n_fft = 1 << int(np.ceil(np.log2(total + n - 1)))

    seq_f = np.fft.rfft(seed.bits.astype(np.float64), n=n_fft)
    rev_f = np.fft.rfft(x[::-1].astype(np.float64), n=n_fft)
    corr = np.fft.irfft(seq_f * rev_f, n=n_fft)

    # y[i] = corr[l + n − 2 − i]
    positions = np.arange(l_out + n - 2, n - 2, -1)
    return (np.rint(corr[positions]).astype(np.int64) % 2).astype(np.uint8)


def toeplitz_matrix(seed: ToeplitzSeed) -> np.ndarray:
    """Dense l×n matrix of the seed (reference for small sizes)."""
    l_out = seed.l_out
    column = seed.bits[:l_out][::-1]
    row = seed.bits[l_out - 1:]
    return toeplitz(column, row).astype(np.uint8)


def toeplitz_hash_naive(bits, seed: ToeplitzSeed) -> np.ndarray:
    """T·x by explicit matrix product."""
    x = validate_bits("bits", bits, seed.n)
    if seed.l_out == 0:
        return np.zeros(0, dtype=np.uint8)
    return ((toeplitz_matrix(seed).astype(np.int64) @ x.astype(np.int64)) % 2).astype(np.uint8)
