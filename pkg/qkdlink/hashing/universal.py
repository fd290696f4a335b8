"""
Universal Hash Families

Both families evaluate the message as a polynomial over GF(2^k):

    P_k(M) = ((M_1·k ⊕ M_2)·k ⊕ ... ⊕ M_L)·k ⊕ len(M))·k

Two messages of at most L blocks collide for at most L + 1 keys, and the
same bound holds for P_k(M) ⊕ P_k(M') = c with any constant c.

Error verification (34-bit tags, GF(2^64)):
    tag = trunc_34(a · P_k(M)), key (k, a) fresh per frame and public afterwards
    collision ≤ (L + 1)/2^64 + 2^-34 ≈ 5.8·10⁻¹¹ for frame-size messages

Authentication (86-bit tags, GF(2^128), Wegman-Carter):
    tag = trunc_86(P_k(M)) ⊕ r, k long-lived, r a one-time pad from the ledger
    forgery ≤ (L + 1)/2^86
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from qkdlink.exceptions import ParameterError
from qkdlink.hashing.field import BinaryField, get_field
from qkdlink.security.budget import TAG_AUTH_BITS, TAG_VERIFY_BITS
from qkdlink.sim.source import derive_seed
from qkdlink.utils.validators import validate_bits, validate_count


VERIFY_FIELD_BITS = 64
AUTH_FIELD_BITS = 128

STREAM_VERIFY = 0x5E


class PolynomialHash:
    """
    Polynomial evaluation P_k(M) over a binary field

    Usage:
        ph = PolynomialHash(get_field(64))
        value = ph.evaluate(key, ph.blocks_from_bytes(data), 8 * len(data))
    """

    def __init__(self, field: BinaryField):
        self.field = field
        self._multiplier = functools.lru_cache(maxsize=16)(field.multiplier)

    @property
    def block_bits(self) -> int:
        return self.field.degree

    def blocks_from_bytes(self, data: bytes) -> List[int]:
        """Split bytes into big-endian field elements, zero-padding the last."""
        if self.block_bits % 8:
            return self.blocks_from_bits(np.unpackbits(np.frombuffer(data, dtype=np.uint8)))
        width = self.block_bits // 8
        padded = bytes(data) + bytes(-len(data) % width)
        if width == 8:
            return np.frombuffer(padded, dtype=">u8").tolist()
        return [int.from_bytes(padded[i:i + width], "big") for i in range(0, len(padded), width)]

    def blocks_from_bits(self, bits) -> List[int]:
        """Group bits (first bit most significant) into field elements."""
        arr = validate_bits("bits", bits)
        if self.block_bits % 8 == 0:
            return self.blocks_from_bytes(np.packbits(arr).tobytes())
        return self.block_matrix(arr[np.newaxis, :])[0].tolist()

    def block_matrix(self, bit_rows: np.ndarray) -> np.ndarray:
        """(messages × bits) 0/1 array → (messages × blocks) uint64 field elements."""
        k = self.block_bits
        rows = np.asarray(bit_rows, dtype=np.uint64)
        pad = -rows.shape[1] % k
        if pad:
            rows = np.pad(rows, ((0, 0), (0, pad)))
        weights = np.uint64(1) << np.arange(k - 1, -1, -1, dtype=np.uint64)
        return (rows.reshape(rows.shape[0], -1, k) * weights).sum(axis=2, dtype=np.uint64)

    def evaluate(self, key: int, blocks: Sequence[int], bit_length: int) -> int:
        """P_k(M) for a message given as blocks plus its length in bits."""
        times_k = self._multiplier(self.field.check(key))
        acc = 0
        for block in blocks:
            acc = times_k(acc ^ block)
        return times_k(acc ^ (bit_length & self.field.mask))

    def evaluate_batch(self, key: int, blocks: np.ndarray, bit_length: int) -> np.ndarray:
        """P_k over many equal-length messages at once (small fields only)."""
        blocks = np.asarray(blocks, dtype=np.uint64)
        acc = np.zeros(blocks.shape[0], dtype=np.uint64)
        for i in range(blocks.shape[1]):
            acc = self.field.mul_array(acc ^ blocks[:, i], key)
        return self.field.mul_array(acc ^ np.uint64(bit_length & self.field.mask), key)

    def collision_bound(self, n_blocks: int) -> float:
        """Max over message pairs of P[P_k(M) ⊕ P_k(M') = c]."""
        return (n_blocks + 1) / self.field.order


# =====================================================
# Error verification
# =====================================================

@dataclass(frozen=True)
class VerifyKey:
    """Per-frame verification key (k, a) in GF(2^k)."""

    poly_key: int
    mask_key: int

    @classmethod
    def generate(cls, rng_seed: int, frame_id: int, field_bits: int = VERIFY_FIELD_BITS) -> "VerifyKey":
        rng = np.random.default_rng(derive_seed(rng_seed, STREAM_VERIFY, frame_id))
        return cls.from_bytes(rng.bytes(field_bits // 4), field_bits)

    def to_bytes(self, field_bits: int = VERIFY_FIELD_BITS) -> bytes:
        width = field_bits // 8
        return self.poly_key.to_bytes(width, "big") + self.mask_key.to_bytes(width, "big")

    @classmethod
    def from_bytes(cls, data: bytes, field_bits: int = VERIFY_FIELD_BITS) -> "VerifyKey":
        width = field_bits // 8
        if len(data) != 2 * width:
            raise ParameterError(f"verify key needs {2 * width} bytes, got {len(data)}")
        return cls(int.from_bytes(data[:width], "big"), int.from_bytes(data[width:], "big"))


class VerificationHash:
    """tag = trunc_t(a · P_k(M))"""

    def __init__(self, field: BinaryField = None, tag_bits: int = TAG_VERIFY_BITS):
        self.poly = PolynomialHash(field or get_field(VERIFY_FIELD_BITS))
        self.tag_bits = validate_count("tag_bits", tag_bits, minimum=1)
        if tag_bits > self.poly.field.degree:
            raise ParameterError(f"tag_bits must not exceed the field degree {self.poly.field.degree}")
        self.tag_mask = (1 << tag_bits) - 1

    def tag(self, bits, key: VerifyKey) -> int:
        arr = validate_bits("bits", bits)
        value = self.poly.evaluate(key.poly_key, self.poly.blocks_from_bits(arr), arr.size)
        return self.poly.field.mul(self.poly.field.check(key.mask_key), value) & self.tag_mask

    def tag_batch(self, bit_rows: np.ndarray, key: VerifyKey) -> np.ndarray:
        """Tags of many equal-length messages (small fields only)."""
        rows = np.asarray(bit_rows)
        value = self.poly.evaluate_batch(key.poly_key, self.poly.block_matrix(rows), rows.shape[1])
        return self.poly.field.mul_array(value, key.mask_key) & np.uint64(self.tag_mask)

    def epsilon(self, n_bits: int) -> float:
        """Collision probability bound for messages of n_bits."""
        n_blocks = -(-n_bits // self.poly.block_bits)
        return self.poly.collision_bound(n_blocks) + 2.0 ** -self.tag_bits


@functools.lru_cache(maxsize=None)
def _verify_family() -> VerificationHash:
    return VerificationHash()


def verify_hash(bits, key: VerifyKey) -> int:
    """34-bit verification tag of a reconciled key."""
    return _verify_family().tag(bits, key)


# =====================================================
# Authentication
# =====================================================

@dataclass(frozen=True)
class AuthTag:
    """
    Wegman-Carter tag

    Attributes:
        value: Tag bits as an integer
        bits: Tag length
        key_bits_consumed: One-time-pad bits taken from the ledger
    """

    value: int
    bits: int = TAG_AUTH_BITS
    key_bits_consumed: int = TAG_AUTH_BITS

    def to_bytes(self) -> bytes:
        return self.value.to_bytes((self.bits + 7) // 8, "big")

    @classmethod
    def from_bytes(cls, data: bytes, bits: int = TAG_AUTH_BITS) -> "AuthTag":
        if len(data) != (bits + 7) // 8:
            raise ParameterError(f"auth tag needs {(bits + 7) // 8} bytes, got {len(data)}")
        value = int.from_bytes(data, "big")
        if value >> bits:
            raise ParameterError("auth tag has bits set beyond its length")
        return cls(value, bits, bits)


@dataclass(frozen=True)
class AuthKey:
    """Long-lived hash key k and the one-time pad r of a single tag."""

    hash_key: int
    pad: int


class AuthenticationHash:
    """tag = trunc_t(P_k(M)) ⊕ r"""

    def __init__(self, field: BinaryField = None, tag_bits: int = TAG_AUTH_BITS):
        self.poly = PolynomialHash(field or get_field(AUTH_FIELD_BITS))
        self.tag_bits = validate_count("tag_bits", tag_bits, minimum=1)
        if tag_bits > self.poly.field.degree:
            raise ParameterError(f"tag_bits must not exceed the field degree {self.poly.field.degree}")
        self.tag_mask = (1 << tag_bits) - 1

    def tag(self, message: bytes, key: AuthKey) -> AuthTag:
        if key.pad >> self.tag_bits:
            raise ParameterError(f"one-time pad must fit in {self.tag_bits} bits")
        value = self.poly.evaluate(key.hash_key, self.poly.blocks_from_bytes(message), 8 * len(message))
        return AuthTag((value & self.tag_mask) ^ key.pad, self.tag_bits, self.tag_bits)

    def check(self, message: bytes, tag: AuthTag, key: AuthKey) -> bool:
        if tag.bits != self.tag_bits:
            return False
        return self.tag(message, key).value == tag.value

    def epsilon(self, n_bytes: int) -> float:
        """Forgery probability bound for messages of n_bytes."""
        n_blocks = -(-8 * n_bytes // self.poly.block_bits)
        return (n_blocks + 1) / 2.0 ** self.tag_bits


@functools.lru_cache(maxsize=None)
def _auth_family() -> AuthenticationHash:
    return AuthenticationHash()


def auth_tag(message: bytes, key: AuthKey) -> AuthTag:
    """86-bit Wegman-Carter tag of a transcript."""
    return _auth_family().tag(message, key)


def auth_check(message: bytes, tag: AuthTag, key: AuthKey) -> bool:
    """Accept (True) or reject (False) a received tag."""
    return _auth_family().check(message, tag, key)
