"""
Validator tests (no simulation required)

Covers the numeric guards shared by the simulator, codes and hash families.
"""

import math

import numpy as np
import pytest

from qkdlink.exceptions import ParameterError
from qkdlink.utils.validators import (
    validate_bits,
    validate_count,
    validate_distribution,
    validate_fraction,
    validate_non_negative,
)


def test_fraction_accepts_closed_range():
    """Both ends of [0, 1] are accepted unless opened"""
    assert validate_fraction("eta_qd", 0.165) == 0.165
    assert validate_fraction("p", 0) == 0.0
    assert validate_fraction("p", 1) == 1.0
    assert validate_fraction("p", np.float32(0.5)) == 0.5


def test_fraction_open_ends():
    with pytest.raises(ParameterError, match=r"\(0"):
        validate_fraction("basis_ratio", 0.0, open_low=True)
    with pytest.raises(ParameterError, match=r"1\)"):
        validate_fraction("basis_ratio", 1.0, open_high=True)


@pytest.mark.parametrize("value", [-0.01, 1.5, math.nan, math.inf])
def test_fraction_out_of_range(value):
    with pytest.raises(ParameterError):
        validate_fraction("misalignment_qber", value)


def test_fraction_rejects_non_numbers():
    """bool is an int subclass but never a valid probability"""
    with pytest.raises(ParameterError, match="number"):
        validate_fraction("p", True)
    with pytest.raises(ParameterError, match="number"):
        validate_fraction("p", "0.5")


def test_non_negative():
    assert validate_non_negative("dark_count_hz", 0) == 0.0
    assert validate_non_negative("channel_loss_db", 9.6) == 9.6
    with pytest.raises(ParameterError):
        validate_non_negative("dead_time_s", -1e-9)
    with pytest.raises(ParameterError):
        validate_non_negative("dead_time_s", math.inf)


def test_count():
    assert validate_count("frame_size", np.int64(200_000), minimum=1) == 200_000
    with pytest.raises(ParameterError, match=">= 100"):
        validate_count("block_len", 99, minimum=100)
    with pytest.raises(ParameterError, match="integer"):
        validate_count("block_len", 100.0)


def test_bits_normalized():
    bits = validate_bits("key", [1, 0, True, 0])
    assert bits.dtype == np.uint8
    assert bits.tolist() == [1, 0, 1, 0]
    assert bits.flags["C_CONTIGUOUS"]


def test_bits_values_and_length():
    with pytest.raises(ParameterError, match="0/1"):
        validate_bits("key", [0, 2])
    with pytest.raises(ParameterError, match="length 3"):
        validate_bits("key", [0, 1], length=3)
    assert validate_bits("empty", []).size == 0


def test_distribution_merges_repeated_degrees():
    dist = validate_distribution("variable", [(2, 0.25), (3, 0.5), (2, 0.25)])
    assert dist == {2: 0.5, 3: 0.5}


def test_distribution_errors():
    with pytest.raises(ParameterError, match="sum to 1"):
        validate_distribution("variable", [(2, 0.4), (3, 0.4)])
    with pytest.raises(ParameterError, match="empty"):
        validate_distribution("variable", [])
    with pytest.raises(ParameterError):
        validate_distribution("variable", [(0, 1.0)])
