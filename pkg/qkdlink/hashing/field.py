"""
Binary Extension Fields

GF(2^k) arithmetic on integers whose bits are polynomial coefficients
(bit i is the coefficient of x^i). Used by the polynomial-evaluation hash
families of error verification and authentication.

Large fields (64, 128 bits) run on Python integers; Horner evaluation always
multiplies by the same key, so `multiplier(h)` precomputes 8-bit window
tables for a fixed factor. Small fields (≤ 32 bits) additionally support
vectorized numpy products for exhaustive checks.
"""

from __future__ import annotations

from typing import Callable, Dict, List

import numpy as np

from qkdlink.exceptions import ParameterError
from qkdlink.utils.validators import validate_count


# =====================================================
# Irreducible moduli (full polynomial, x^k term included)
# =====================================================

GF8_MODULUS = (1 << 8) | 0x1B      # x^8 + x^4 + x^3 + x + 1
GF10_MODULUS = (1 << 10) | 0x009   # x^10 + x^3 + 1
GF64_MODULUS = (1 << 64) | 0x1B    # x^64 + x^4 + x^3 + x + 1
GF128_MODULUS = (1 << 128) | 0x87  # x^128 + x^7 + x^2 + x + 1

WINDOW_BITS = 8
VECTOR_MAX_DEGREE = 32


class BinaryField:
    """
    GF(2^k) with a fixed irreducible modulus

    Usage:
        gf = BinaryField(64, GF64_MODULUS)
        c = gf.mul(a, b)
        times_h = gf.multiplier(h)   # fast repeated products by h
    """

    def __init__(self, degree: int, modulus: int):
        self.degree = validate_count("degree", degree, minimum=1)
        if modulus >> degree != 1:
            raise ParameterError(f"modulus must have degree {degree}")
        self.modulus = modulus
        self.order = 1 << degree
        self.mask = self.order - 1

    def __repr__(self) -> str:
        return f"BinaryField(2^{self.degree}, modulus={self.modulus:#x})"

    def check(self, a: int) -> int:
        if not 0 <= a < self.order:
            raise ParameterError(f"element out of GF(2^{self.degree}): {a}")
        return a

    def mul(self, a: int, b: int) -> int:
        """Shift-and-add product with interleaved reduction."""
        result = 0
        top = self.order
        while b:
            if b & 1:
                result ^= a
            b >>= 1
            a <<= 1
            if a & top:
                a ^= self.modulus
        return result

    def pow(self, a: int, e: int) -> int:
        result = 1
        while e:
            if e & 1:
                result = self.mul(result, a)
            a = self.mul(a, a)
            e >>= 1
        return result

    def inverse(self, a: int) -> int:
        if a == 0:
            raise ParameterError("zero has no inverse")
        return self.pow(a, self.order - 2)

    def multiplier(self, h: int) -> Callable[[int], int]:
        """
        x ↦ x·h using precomputed 8-bit window tables

        Table entry [w][v] holds (v·x^(8w))·h; a product is the XOR of one
        lookup per window.
        """
        self.check(h)
        basis: List[int] = []
        x = h
        for _ in range(self.degree):
            basis.append(x)
            x <<= 1
            if x & self.order:
                x ^= self.modulus

        tables: List[List[int]] = []
        for w in range(0, self.degree, WINDOW_BITS):
            width = min(WINDOW_BITS, self.degree - w)
            table = [0] * (1 << width)
            for v in range(1, 1 << width):
                low = (v & -v).bit_length() - 1
                table[v] = table[v & (v - 1)] ^ basis[w + low]
            tables.append(table)

        mask = (1 << WINDOW_BITS) - 1

        def times_h(a: int) -> int:
            acc = 0
            for table in tables:
                acc ^= table[a & mask]
                a >>= WINDOW_BITS
            return acc

        return times_h

    # =====================================================
    # Vectorized arithmetic (small fields)
    # =====================================================

    def mul_array(self, a, b) -> np.ndarray:
        """Element-wise product of uint64 arrays (or array and scalar)."""
        if self.degree > VECTOR_MAX_DEGREE:
            raise ParameterError(f"vectorized products need degree <= {VECTOR_MAX_DEGREE}")
        a = np.asarray(a, dtype=np.uint64)
        b = np.asarray(b, dtype=np.uint64)
        a, b = np.broadcast_arrays(a, b)

        one = np.uint64(1)
        product = np.zeros(a.shape, dtype=np.uint64)
        for i in range(self.degree):
            bit = (b >> np.uint64(i)) & one
            product ^= (a << np.uint64(i)) * bit

        for i in range(2 * self.degree - 2, self.degree - 1, -1):
            bit = (product >> np.uint64(i)) & one
            product ^= np.uint64(self.modulus << (i - self.degree)) * bit
        return product


_FIELDS: Dict[int, BinaryField] = {}


def get_field(degree: int) -> BinaryField:
    """Shared field instance for the supported degrees (8, 10, 64, 128)."""
    if degree not in _FIELDS:
        moduli = {8: GF8_MODULUS, 10: GF10_MODULUS, 64: GF64_MODULUS, 128: GF128_MODULUS}
        if degree not in moduli:
            raise ParameterError(f"no modulus registered for GF(2^{degree})")
        _FIELDS[degree] = BinaryField(degree, moduli[degree])
    return _FIELDS[degree]
