"""
Authentication Key Ledger

Holds the secret material used for Wegman-Carter tags: a long-lived
polynomial hash key and a pool of one-time-pad bits. The pool is seeded by
the pre-shared bootstrap key and refilled from each frame's privacy
amplification output. Access is serialized with a lock.
"""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Union

import numpy as np

from qkdlink.exceptions import KeyMaterialExhausted, ParameterError
from qkdlink.hashing.universal import AUTH_FIELD_BITS, AuthKey
from qkdlink.sim.source import derive_seed
from qkdlink.utils.logger import logger
from qkdlink.utils.validators import validate_bits, validate_count

BOOTSTRAP_BITS = 4096
STREAM_BOOTSTRAP = 0xB007


def _bits_to_int(bits: np.ndarray) -> int:
    return int.from_bytes(np.packbits(bits).tobytes(), "big") >> (-bits.size % 8)


class KeyLedger:
    """
    Authentication key material of one party

    Usage:
        ledger = KeyLedger.bootstrap(psk_bits)
        key = ledger.next_auth_key(86)       # consumes 86 pad bits
        ledger.replenish(pa_output[:172])

    Attributes:
        hash_key: Polynomial hash key (first 128 bootstrap bits)
        consumed: Pad bits taken since creation
        replenished: Pad bits added since creation
    """

    def __init__(self, hash_key: int, pool_bits, hash_key_bits: int = AUTH_FIELD_BITS):
        if not 0 <= hash_key < (1 << hash_key_bits):
            raise ParameterError(f"hash_key must fit in {hash_key_bits} bits")
        self.hash_key = hash_key
        self._pool = validate_bits("pool_bits", pool_bits).copy()
        self._lock = threading.Lock()
        self.consumed = 0
        self.replenished = 0

    @classmethod
    def bootstrap(cls, key_bits, hash_key_bits: int = AUTH_FIELD_BITS) -> "KeyLedger":
        """Split a pre-shared key into hash key and pad pool."""
        bits = validate_bits("bootstrap key", key_bits)
        if bits.size <= hash_key_bits:
            raise ParameterError(f"bootstrap key must be longer than {hash_key_bits} bits, got {bits.size}")
        return cls(_bits_to_int(bits[:hash_key_bits]), bits[hash_key_bits:], hash_key_bits)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "KeyLedger":
        """Read a raw binary bootstrap key (512 bytes for the default 4096 bits)."""
        data = Path(path).read_bytes()
        return cls.bootstrap(np.unpackbits(np.frombuffer(data, dtype=np.uint8)))

    @staticmethod
    def derive_bootstrap(seed: int, n_bits: int = BOOTSTRAP_BITS) -> np.ndarray:
        """
        Deterministic bootstrap key for simulated sessions

        Both peers must load the same value; a real deployment reads it from
        a pre-shared file instead.
        """
        rng = np.random.default_rng(derive_seed(seed, STREAM_BOOTSTRAP))
        return rng.integers(0, 2, size=validate_count("n_bits", n_bits, minimum=1), dtype=np.uint8)

    @property
    def available(self) -> int:
        return int(self._pool.size)

    def consume(self, n_bits: int) -> np.ndarray:
        """
        Take n_bits from the front of the pool

        Raises:
            KeyMaterialExhausted: If fewer than n_bits are left
        """
        n_bits = validate_count("n_bits", n_bits)
        with self._lock:
            if n_bits > self._pool.size:
                raise KeyMaterialExhausted(f"need {n_bits} authentication bits, {self._pool.size} left")
            taken, self._pool = self._pool[:n_bits].copy(), self._pool[n_bits:]
            self.consumed += n_bits
        return taken

    def next_auth_key(self, tag_bits: int) -> AuthKey:
        """Hash key plus a fresh one-time pad for one tag."""
        return AuthKey(hash_key=self.hash_key, pad=_bits_to_int(self.consume(tag_bits)))

    def replenish(self, bits) -> None:
        arr = validate_bits("bits", bits)
        with self._lock:
            self._pool = np.concatenate([self._pool, arr])
            self.replenished += int(arr.size)
        logger.debug("auth_ledger_replenished", added=int(arr.size), available=self.available)
