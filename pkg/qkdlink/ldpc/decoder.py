"""
Syndrome Belief Propagation

Flooding-schedule sum-product decoding against a target syndrome. Messages
live on the edge arrays of LdpcCode (check-major order); per-check products
of the tanh rule are taken in the log domain with np.add.reduceat.

    v→c:  m_vc = L_v + Σ_{c'≠c} m_c'v
    c→v:  m_cv = (1 − 2·s_c) · 2·atanh(Π_{v'≠v} tanh(m_v'c / 2))

Convergence means H·x̂ = s; the check runs before the first iteration too.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from qkdlink.exceptions import ParameterError
from qkdlink.ldpc.code import LdpcCode
from qkdlink.utils.validators import validate_bits, validate_count, validate_fraction


DEFAULT_MAX_ITERS = 60
TANH_CLIP = 1e-12
# Certain bits (shortened, known value) get this LLR magnitude.
KNOWN_LLR = 50.0


@dataclass
class DecodeResult:
    """bits is None unless converged."""

    bits: Optional[np.ndarray]
    converged: bool
    iterations: int


def channel_llr(bits, channel_qber: float) -> np.ndarray:
    """L = ln((1 − q)/q)·(1 − 2·y)"""
    y = validate_bits("bits", bits)
    validate_fraction("channel_qber", channel_qber, open_low=True, open_high=True)
    if channel_qber >= 0.5:
        raise ParameterError("channel_qber must be below 0.5")
    magnitude = np.log((1.0 - channel_qber) / channel_qber)
    return magnitude * (1.0 - 2.0 * y.astype(np.float64))


def syndrome_matches(code: LdpcCode, hard: np.ndarray, target: np.ndarray) -> bool:
    return bool(np.array_equal(code.syndrome(hard), target))


def decode_llr(code: LdpcCode, llr: np.ndarray, target_syndrome, max_iters: int = DEFAULT_MAX_ITERS) -> DecodeResult:
    """
    Sum-product decoding from prior LLRs

    Args:
        code: LDPC code
        llr: Prior log-likelihood ratios (positive favours 0), length block_len
        target_syndrome: Syndrome the corrected word must satisfy
        max_iters: Iteration cap (≥ 1)
    """
    validate_count("max_iters", max_iters, minimum=1)
    llr = np.asarray(llr, dtype=np.float64)
    if llr.shape != (code.block_len,):
        raise ParameterError(f"llr must have length {code.block_len}, got {llr.shape}")
    target = validate_bits("target_syndrome", target_syndrome, code.n_checks)

    var, chk, ptr = code.edge_var, code.edge_check, code.check_ptr
    check_sign = 1.0 - 2.0 * target.astype(np.float64)

    hard = (llr < 0).astype(np.uint8)
    if syndrome_matches(code, hard, target):
        return DecodeResult(hard, True, 0)

    c2v = np.zeros(var.size, dtype=np.float64)
    total = llr.copy()
    for iteration in range(1, max_iters + 1):
        v2c = total[var] - c2v

        t = np.tanh(0.5 * v2c)
        negative = t < 0
        log_mag = np.log(np.clip(np.abs(t), TANH_CLIP, 1.0 - TANH_CLIP))

        sum_log = np.add.reduceat(log_mag, ptr)[chk]
        neg_count = np.add.reduceat(negative.astype(np.int64), ptr)[chk]

        extrinsic = np.exp(sum_log - log_mag)
        sign = np.where((neg_count - negative) % 2 == 1, -1.0, 1.0) * check_sign[chk]
        c2v = 2.0 * np.arctanh(np.clip(sign * extrinsic, -1.0 + TANH_CLIP, 1.0 - TANH_CLIP))

        total = llr + np.bincount(var, weights=c2v, minlength=code.block_len)
        hard = (total < 0).astype(np.uint8)
        if syndrome_matches(code, hard, target):
            return DecodeResult(hard, True, iteration)

    return DecodeResult(None, False, max_iters)


def decode(
    code: LdpcCode,
    noisy_bits,
    target_syndrome,
    channel_qber: float,
    max_iters: int = DEFAULT_MAX_ITERS,
    punctured: Optional[np.ndarray] = None,
    shortened: Optional[np.ndarray] = None,
    shortened_values: Optional[np.ndarray] = None,
) -> DecodeResult:
    """
    Correct noisy_bits toward the word with syndrome target_syndrome

    Punctured positions start at LLR 0; shortened positions are pinned to
    their known values.

    Returns:
        DecodeResult; bits only when H·bits = target_syndrome
    """
    llr = channel_llr(validate_bits("noisy_bits", noisy_bits, code.block_len), channel_qber)
    if punctured is not None and len(punctured):
        llr[np.asarray(punctured, dtype=np.int64)] = 0.0
    if shortened is not None and len(shortened):
        shortened = np.asarray(shortened, dtype=np.int64)
        values = validate_bits("shortened_values", shortened_values, shortened.size)
        llr[shortened] = KNOWN_LLR * (1.0 - 2.0 * values.astype(np.float64))
    return decode_llr(code, llr, target_syndrome, max_iters)
