"""
Rate Adaptation

A frame of n key bits is embedded in a base codeword of nb = n + d bits;
the d = round(δ·n) extra positions are split into p punctured (random,
unknown to Bob) and s shortened (public values) positions. With K = nb − m
information positions of the base code:

    effective_rate = (K − s) / (nb − p − s) = (R·nb − s) / n

Shortening lowers the rate, puncturing raises it. The leakage of one
syndrome is m − p (shortened values are public noise, not key bits).
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Tuple

import numpy as np

from qkdlink.exceptions import ParameterError, UnsupportedRateError
from qkdlink.ldpc.code import LdpcCode
from qkdlink.ldpc.peg import BASE_RATES, load_distribution, peg_construct
from qkdlink.ldpc.store import CodeStore, MemoryCodeStore, code_key
from qkdlink.security.bounds import binary_entropy
from qkdlink.sim.source import derive_seed
from qkdlink.utils.logger import logger
from qkdlink.utils.validators import validate_count, validate_fraction, validate_non_negative


DEFAULT_DELTA = 0.1
DEFAULT_EFFICIENCY = 1.17
MAX_TARGET_RATE = 0.9
MAX_SUPPORTED_QBER = 0.11
RETRY_RATE_STEP = 0.05

STREAM_MODULATE = 0x4D
RATE_IDENTITY_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class RateAdaptConfig:
    """
    Punctured and shortened positions of one reconciliation attempt

    Attributes:
        base_rate: Exact rate of the base code, 1 − m/nb
        block_len: nb
        n_checks: m
        punctured: Sorted punctured positions
        shortened: Sorted shortened positions
        target_rate: Rate the positions were chosen for
        effective_rate: (R·nb − s)/(nb − p − s)
    """

    base_rate: float
    block_len: int
    n_checks: int
    punctured: np.ndarray
    shortened: np.ndarray
    target_rate: float
    effective_rate: float = field(default=float("nan"))

    def __post_init__(self):
        punct = np.unique(np.asarray(self.punctured, dtype=np.int64))
        short = np.unique(np.asarray(self.shortened, dtype=np.int64))
        object.__setattr__(self, "punctured", punct)
        object.__setattr__(self, "shortened", short)
        if np.intersect1d(punct, short).size:
            raise ParameterError("punctured and shortened positions overlap")
        if self.n_key < 1:
            raise ParameterError("no key positions left after puncturing and shortening")

        identity = (self.base_rate * self.block_len - short.size) / self.n_key
        if math.isnan(self.effective_rate):
            object.__setattr__(self, "effective_rate", identity)
        elif abs(self.effective_rate - identity) > RATE_IDENTITY_TOLERANCE:
            raise ParameterError(
                f"effective rate {self.effective_rate:.6f} violates (R·nb − s)/(nb − p − s) = {identity:.6f}"
            )

    @property
    def n_key(self) -> int:
        return self.block_len - self.punctured.size - self.shortened.size

    @property
    def leakage(self) -> int:
        """Bits disclosed by the syndrome: m − p."""
        return self.n_checks - int(self.punctured.size)

    def key_positions(self) -> np.ndarray:
        mask = np.ones(self.block_len, dtype=bool)
        mask[self.punctured] = False
        mask[self.shortened] = False
        return np.flatnonzero(mask)


class CodeSet:
    """
    The base codes of a frame size, built lazily

    Usage:
        codes = CodeSet(frame_len=10_000, seed=1)
        code = codes.get(0.70)
    """

    def __init__(
        self,
        frame_len: int,
        rates: Iterable[float] = BASE_RATES,
        seed: int = 0,
        delta: float = DEFAULT_DELTA,
        store: Optional[CodeStore] = None,
        distributions: Optional[Dict[float, Dict[int, float]]] = None,
        max_depth: Optional[int] = -1,
    ):
        self.frame_len = validate_count("frame_len", frame_len, minimum=1)
        self.delta = validate_fraction("delta", delta, open_high=True)
        self.modulated = int(round(delta * frame_len))
        self.block_len = self.frame_len + self.modulated
        self.rates = tuple(sorted(float(r) for r in rates))
        if not self.rates:
            raise ParameterError("code set needs at least one rate")
        self.seed = int(seed)
        self.store = store if store is not None else MemoryCodeStore()
        self.distributions = dict(distributions or {})
        self.max_depth = max_depth
        self._lock = threading.Lock()

    def key(self, rate: float) -> str:
        return code_key(rate, self.block_len, self.seed + self.rates.index(rate))

    def get(self, rate: float) -> LdpcCode:
        if rate not in self.rates:
            raise ParameterError(f"rate {rate} is not in the code set {self.rates}")
        key = self.key(rate)
        # Both peers of an in-process session share one set; build each code once.
        with self._lock:
            code = self.store.get(key)
            if code is None:
                distribution = self.distributions.get(rate) or load_distribution(rate)
                code = peg_construct(self.block_len, distribution, self.seed + self.rates.index(rate),
                                     rate, max_depth=self.max_depth)
                self.store.put(key, code)
                logger.info("base_code_built", rate=rate, block_len=self.block_len, edges=code.n_edges)
        return code

    def warm(self) -> None:
        for rate in self.rates:
            self.get(rate)


def target_rate(q: float, f_target: float = DEFAULT_EFFICIENCY, rate_offset: float = 0.0) -> float:
    """R_t = min(0.9, 1 − f·H(q)) − rate_offset"""
    return min(MAX_TARGET_RATE, 1.0 - f_target * binary_entropy(q)) - rate_offset


def select_rate(
    q: float,
    code_set: CodeSet,
    f_target: float = DEFAULT_EFFICIENCY,
    rate_offset: float = 0.0,
    position_seed: int = 0,
) -> Tuple[LdpcCode, RateAdaptConfig]:
    """
    Base code and puncturing/shortening for a QBER estimate

    The base code whose rate is closest to R_t is used (ties to the lower
    rate); s = ceil(R·nb − R_t·n) shortened and p = d − s punctured
    positions bring its rate down to at most R_t. Positions are drawn from
    position_seed, which both sides know.

    Args:
        q: QBER estimate (q̂ or q̃), in [0, 0.11]
        code_set: Available base codes
        f_target: Target reconciliation efficiency
        rate_offset: Subtracted from R_t (retries)
        position_seed: Public seed for the modulated positions

    Raises:
        UnsupportedRateError: If q exceeds the supported range
    """
    validate_fraction("q", q)
    validate_non_negative("f_target", f_target)
    if q > MAX_SUPPORTED_QBER:
        raise UnsupportedRateError(f"QBER {q:.4f} above supported maximum {MAX_SUPPORTED_QBER}")

    r_t = target_rate(q, f_target, rate_offset)
    rate = min(code_set.rates, key=lambda r: (abs(r - r_t), r))
    code = code_set.get(rate)

    nb, n, d = code_set.block_len, code_set.frame_len, code_set.modulated
    info_positions = nb - code.n_checks
    shortened = int(np.clip(math.ceil(info_positions - r_t * n - 1e-9), 0, d))
    punctured = d - shortened

    rng = np.random.default_rng(derive_seed(position_seed, STREAM_MODULATE))
    positions = rng.choice(nb, size=d, replace=False)
    config = RateAdaptConfig(
        base_rate=code.code_rate,
        block_len=nb,
        n_checks=code.n_checks,
        punctured=positions[:punctured],
        shortened=positions[punctured:],
        target_rate=r_t,
    )
    if config.effective_rate > r_t + 1e-9:
        logger.warning("rate_target_unreachable", q=q, target_rate=round(r_t, 4),
                       effective_rate=round(config.effective_rate, 4))
    return code, config
