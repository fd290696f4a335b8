"""
Universal hashing: Toeplitz privacy amplification, error verification and
Wegman-Carter authentication.
"""

from qkdlink.hashing.field import BinaryField, get_field
from qkdlink.hashing.ledger import KeyLedger
from qkdlink.hashing.toeplitz import ToeplitzSeed, toeplitz_hash
from qkdlink.hashing.universal import (
    AuthKey,
    AuthTag,
    PolynomialHash,
    VerifyKey,
    auth_check,
    auth_tag,
    verify_hash,
)

__all__ = [
    "AuthKey",
    "AuthTag",
    "BinaryField",
    "KeyLedger",
    "PolynomialHash",
    "ToeplitzSeed",
    "VerifyKey",
    "auth_check",
    "auth_tag",
    "get_field",
    "toeplitz_hash",
    "verify_hash",
]
