"""
Input Validators

Validates numeric parameters before they reach the simulator, the security
bounds or the codecs. Every validator returns the (coerced) value so calls
can be chained into assignments.
"""

from typing import Sequence

import numpy as np

from qkdlink.exceptions import ParameterError


def validate_fraction(name: str, value: float, *, open_low: bool = False, open_high: bool = False) -> float:
    """
    Validate a probability-like value

    Args:
        name: Parameter name used in the error message
        value: Value to check
        open_low: Exclude 0 from the accepted range
        open_high: Exclude 1 from the accepted range

    Returns:
        The value as float

    Raises:
        ParameterError: If the value is not a finite number in the range

    Examples:
        validate_fraction("eta_qd", 0.165)                  # → 0.165
        validate_fraction("basis_ratio", 0.0, open_low=True)  # ✗ raises
    """
    if isinstance(value, bool) or not isinstance(value, (int, float, np.floating, np.integer)):
        raise ParameterError(f"{name} must be a number, got {type(value).__name__}")

    value = float(value)
    if not np.isfinite(value):
        raise ParameterError(f"{name} must be finite, got {value}")

    low_ok = value > 0.0 if open_low else value >= 0.0
    high_ok = value < 1.0 if open_high else value <= 1.0
    if not (low_ok and high_ok):
        lo = "(0" if open_low else "[0"
        hi = "1)" if open_high else "1]"
        raise ParameterError(f"{name} must be in {lo}, {hi}, got {value}")

    return value


def validate_non_negative(name: str, value: float) -> float:
    """Validate a rate, duration or loss figure (finite and ≥ 0)."""
    if isinstance(value, bool) or not isinstance(value, (int, float, np.floating, np.integer)):
        raise ParameterError(f"{name} must be a number, got {type(value).__name__}")

    value = float(value)
    if not np.isfinite(value) or value < 0.0:
        raise ParameterError(f"{name} must be non-negative, got {value}")

    return value


def validate_count(name: str, value: int, minimum: int = 0) -> int:
    """
    Validate an integer count

    Raises:
        ParameterError: If value is not an integer or is below minimum
    """
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ParameterError(f"{name} must be an integer, got {type(value).__name__}")

    value = int(value)
    if value < minimum:
        raise ParameterError(f"{name} must be >= {minimum}, got {value}")

    return value


def validate_bits(name: str, bits, length: int = None) -> np.ndarray:
    """
    Validate and normalize a bit vector

    Accepts any array-like of 0/1 values and returns a contiguous uint8 array.

    Raises:
        ParameterError: If values other than 0/1 are present or the length differs
    """
    arr = np.ascontiguousarray(bits, dtype=np.uint8).ravel()
    if arr.size and arr.max() > 1:
        raise ParameterError(f"{name} must contain only 0/1 values")

    if length is not None and arr.size != length:
        raise ParameterError(f"{name} must have length {length}, got {arr.size}")

    return arr


def validate_distribution(name: str, pairs: Sequence) -> dict:
    """
    Validate a (degree, fraction) distribution

    Returns:
        dict mapping degree → fraction

    Raises:
        ParameterError: If degrees are < 1, fractions negative, or the sum differs from 1
    """
    dist = {}
    for degree, fraction in pairs:
        degree = validate_count(f"{name} degree", int(degree), minimum=1)
        fraction = validate_fraction(f"{name} fraction", float(fraction))
        dist[degree] = dist.get(degree, 0.0) + fraction

    if not dist:
        raise ParameterError(f"{name} must not be empty")

    total = sum(dist.values())
    if abs(total - 1.0) > 1e-6:
        raise ParameterError(f"{name} fractions must sum to 1, got {total:.6f}")

    return dist
