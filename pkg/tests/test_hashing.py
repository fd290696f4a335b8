"""
Unit tests for universal hashing: Toeplitz privacy amplification, binary
fields, verification and authentication tags, and the key ledger.
"""

import numpy as np
import pytest

from qkdlink.exceptions import KeyMaterialExhausted, ParameterError
from qkdlink.hashing.field import GF128_MODULUS, BinaryField, get_field
from qkdlink.hashing.ledger import KeyLedger
from qkdlink.hashing.toeplitz import ToeplitzSeed, toeplitz_hash, toeplitz_hash_naive
from qkdlink.hashing.universal import (
    AuthKey,
    AuthTag,
    PolynomialHash,
    VerificationHash,
    VerifyKey,
    auth_check,
    auth_tag,
    verify_hash,
)


def _bits(count: int, seed: int = 0) -> np.ndarray:
    return np.random.default_rng(seed).integers(0, 2, count, dtype=np.uint8)


# =====================================================
# Toeplitz
# =====================================================

class TestToeplitz:

    @pytest.mark.parametrize("n,l_out", [(64, 17), (1000, 333), (5000, 2500)])
    def test_fft_matches_matrix_product(self, n, l_out):
        seed = ToeplitzSeed.generate(n, l_out, rng_seed=7)
        x = _bits(n, 1)
        assert np.array_equal(toeplitz_hash(x, seed), toeplitz_hash_naive(x, seed))

    def test_linear_over_gf2(self):
        seed = ToeplitzSeed.generate(2000, 700, rng_seed=3)
        x, y = _bits(2000, 1), _bits(2000, 2)
        assert np.array_equal(toeplitz_hash(x ^ y, seed), toeplitz_hash(x, seed) ^ toeplitz_hash(y, seed))

    def test_first_row_reads_seed_backwards(self):
        seed = ToeplitzSeed(np.array([1, 0, 0, 0, 0], dtype=np.uint8), n=3, l_out=3)
        # T[2][0] = seed[0]; only the last output bit sees x[0].
        assert toeplitz_hash(np.array([1, 0, 0], dtype=np.uint8), seed).tolist() == [0, 0, 1]

    def test_seed_depends_on_frame(self):
        a = ToeplitzSeed.generate(500, 100, rng_seed=3, frame_id=1)
        b = ToeplitzSeed.generate(500, 100, rng_seed=3, frame_id=2)
        assert not np.array_equal(a.bits, b.bits)

    def test_seed_bytes(self):
        seed = ToeplitzSeed.generate(500, 100, rng_seed=3)
        data = seed.to_bytes()
        assert len(data) == (599 + 7) // 8
        assert np.array_equal(ToeplitzSeed.from_bytes(data, 500, 100).bits, seed.bits)

    def test_seed_bytes_length_checked(self):
        with pytest.raises(ParameterError):
            ToeplitzSeed.from_bytes(b"\x00" * 3, 500, 100)

    def test_output_longer_than_input_rejected(self):
        with pytest.raises(ParameterError):
            ToeplitzSeed.generate(100, 101, rng_seed=1)

    def test_zero_output(self):
        seed = ToeplitzSeed.generate(100, 0, rng_seed=1)
        assert toeplitz_hash(_bits(100), seed).size == 0

    def test_length_mismatch_rejected(self):
        seed = ToeplitzSeed.generate(100, 10, rng_seed=1)
        with pytest.raises(ParameterError):
            toeplitz_hash(_bits(99), seed)
        with pytest.raises(ParameterError):
            toeplitz_hash(_bits(100), seed, out_len=11)


# =====================================================
# Binary fields
# =====================================================

class TestBinaryField:

    def test_known_product(self):
        assert get_field(8).mul(0x57, 0x83) == 0xC1

    def test_inverse(self):
        gf = get_field(64)
        a = 0x0123456789ABCDEF
        assert gf.mul(a, gf.inverse(a)) == 1

    def test_zero_has_no_inverse(self):
        with pytest.raises(ParameterError):
            get_field(8).inverse(0)

    def test_window_multiplier_matches_product(self):
        gf = get_field(128)
        rng = np.random.default_rng(5)
        h = int.from_bytes(rng.bytes(16), "big")
        times_h = gf.multiplier(h)
        for _ in range(20):
            a = int.from_bytes(rng.bytes(16), "big")
            assert times_h(a) == gf.mul(a, h)

    def test_vector_product_matches_scalar(self):
        gf = get_field(10)
        a = np.arange(0, 1024, 7, dtype=np.uint64)
        b = np.uint64(0x2B5)
        assert gf.mul_array(a, b).tolist() == [gf.mul(int(x), 0x2B5) for x in a]

    def test_vector_product_needs_small_field(self):
        with pytest.raises(ParameterError):
            get_field(64).mul_array([1], [2])

    def test_modulus_degree_checked(self):
        with pytest.raises(ParameterError):
            BinaryField(127, GF128_MODULUS)

    def test_unknown_degree(self):
        with pytest.raises(ParameterError):
            get_field(7)


class TestPolynomialHash:

    def test_collisions_within_bound(self):
        """Over all keys of GF(2^10), two 2-block messages collide for at most 3 keys."""
        ph = PolynomialHash(get_field(10))
        m1, m2 = [0x155, 0x0F0], [0x2AA, 0x0F1]
        collisions = sum(ph.evaluate(k, m1, 20) == ph.evaluate(k, m2, 20) for k in range(1024))
        assert collisions <= 3
        assert ph.collision_bound(2) == pytest.approx(3 / 1024)

    def test_batch_matches_scalar(self):
        ph = PolynomialHash(get_field(10))
        rows = np.stack([_bits(30, s) for s in range(5)])
        blocks = ph.block_matrix(rows)
        batch = ph.evaluate_batch(0x1F3, blocks, 30)
        assert batch.tolist() == [ph.evaluate(0x1F3, b.tolist(), 30) for b in blocks]

    def test_length_is_hashed(self):
        ph = PolynomialHash(get_field(64))
        assert ph.evaluate(12345, [0, 1], 100) != ph.evaluate(12345, [0, 1], 101)


# =====================================================
# Verification and authentication
# =====================================================

class TestVerificationHash:

    def test_equal_keys_equal_tags(self):
        key = VerifyKey.generate(rng_seed=4, frame_id=1)
        x = _bits(10_000, 9)
        assert verify_hash(x, key) == verify_hash(x.copy(), key)
        assert 0 <= verify_hash(x, key) < 2 ** 34

    def test_single_bit_error_detected(self):
        key = VerifyKey.generate(rng_seed=4, frame_id=1)
        x = _bits(10_000, 9)
        y = x.copy()
        y[1234] ^= 1
        assert verify_hash(x, key) != verify_hash(y, key)

    def test_key_bytes(self):
        key = VerifyKey.generate(rng_seed=4, frame_id=1)
        assert len(key.to_bytes()) == 16
        assert VerifyKey.from_bytes(key.to_bytes()) == key

    def test_epsilon_at_frame_size(self):
        eps = VerificationHash().epsilon(200_000)
        assert eps == pytest.approx(3126 / 2 ** 64 + 2 ** -34)
        assert eps < 6e-11

    def test_small_field_batch_matches_scalar(self):
        family = VerificationHash(get_field(10), tag_bits=6)
        key = VerifyKey(0x155, 0x2A3)
        rows = np.stack([_bits(40, s) for s in range(4)])
        assert family.tag_batch(rows, key).tolist() == [family.tag(r, key) for r in rows]

    def test_tag_wider_than_field_rejected(self):
        with pytest.raises(ParameterError):
            VerificationHash(get_field(10), tag_bits=11)


class TestAuthentication:

    def _key(self, pad: int = 0x1234) -> AuthKey:
        return AuthKey(hash_key=0xDEADBEEF << 64 | 0x1234567, pad=pad)

    def test_tag_accepted(self):
        message = b"transcript of frame 7"
        tag = auth_tag(message, self._key())
        assert tag.bits == 86
        assert tag.value < 2 ** 86
        assert auth_check(message, tag, self._key())

    def test_modified_message_rejected(self):
        tag = auth_tag(b"transcript of frame 7", self._key())
        assert not auth_check(b"transcript of frame 8", tag, self._key())

    def test_pad_masks_tag(self):
        a = auth_tag(b"abc", self._key(pad=0))
        b = auth_tag(b"abc", self._key(pad=0b101))
        assert a.value ^ b.value == 0b101

    def test_wrong_pad_rejected(self):
        tag = auth_tag(b"abc", self._key(pad=1))
        assert not auth_check(b"abc", tag, self._key(pad=2))

    def test_oversized_pad_rejected(self):
        with pytest.raises(ParameterError):
            auth_tag(b"abc", self._key(pad=1 << 86))

    def test_tag_bytes(self):
        tag = auth_tag(b"abc", self._key())
        data = tag.to_bytes()
        assert len(data) == 11
        assert AuthTag.from_bytes(data) == tag

    def test_tag_bytes_with_stray_bits_rejected(self):
        with pytest.raises(ParameterError):
            AuthTag.from_bytes(b"\xff" * 11)


# =====================================================
# Ledger
# =====================================================

class TestKeyLedger:

    def _make_ledger(self, n_bits: int = 4096) -> KeyLedger:
        return KeyLedger.bootstrap(KeyLedger.derive_bootstrap(seed=1, n_bits=n_bits))

    def test_bootstrap_split(self):
        ledger = self._make_ledger()
        assert ledger.available == 4096 - 128
        assert ledger.hash_key < 2 ** 128

    def test_derived_bootstrap_is_shared(self):
        a, b = self._make_ledger(), self._make_ledger()
        assert a.hash_key == b.hash_key
        assert a.next_auth_key(86) == b.next_auth_key(86)

    def test_consume_takes_from_front(self):
        bits = KeyLedger.derive_bootstrap(seed=2)
        ledger = KeyLedger.bootstrap(bits)
        assert np.array_equal(ledger.consume(10), bits[128:138])
        assert ledger.consumed == 10

    def test_exhaustion(self):
        ledger = self._make_ledger(128 + 100)
        ledger.next_auth_key(86)
        with pytest.raises(KeyMaterialExhausted):
            ledger.next_auth_key(86)
        assert ledger.available == 14

    def test_replenish(self):
        ledger = self._make_ledger(128 + 100)
        ledger.consume(100)
        ledger.replenish(_bits(172))
        assert ledger.available == 172
        assert ledger.replenished == 172
        ledger.next_auth_key(86)
        ledger.next_auth_key(86)
        assert ledger.available == 0

    def test_from_file(self, tmp_path):
        bits = KeyLedger.derive_bootstrap(seed=3)
        path = tmp_path / "psk.bin"
        path.write_bytes(np.packbits(bits).tobytes())
        assert KeyLedger.from_file(path).hash_key == KeyLedger.bootstrap(bits).hash_key

    def test_short_bootstrap_rejected(self):
        with pytest.raises(ParameterError):
            KeyLedger.bootstrap(_bits(128))
