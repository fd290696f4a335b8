"""
Security Budget and Key-Length Results

Holds the ε parameters of one run and the per-frame outcome of the
finite-key length computation, including its leakage breakdown.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Dict, Optional

from qkdlink.exceptions import BudgetError
from qkdlink.utils.validators import validate_count, validate_fraction


# =====================================================
# Defaults
# =====================================================

EPS_TOTAL = 1e-10
EPS_PE = 4e-12
EPS_COR = 6e-11
EPS_AUTH = 1e-12
TAG_AUTH_BITS = 86
TAG_VERIFY_BITS = 34
AUTH_TAGS_PER_FRAME = 2   # one tag per direction over the frame transcript


@dataclass(frozen=True)
class SecurityBudget:
    """
    ε budget of a run

    eps_bar and eps_pa may be left unset; `resolved(n)` fills them with the
    split that minimizes the finite-size term for block length n.

    Attributes:
        eps_total: Overall security parameter
        eps_pe: Parameter-estimation failure
        eps_cor: Correctness (verification-hash collision)
        eps_auth: Authentication failure
        eps_pa: Privacy-amplification term
        eps_bar: Smoothing term
        leak_ev: Bits disclosed by error verification (the verify tag length)
        tag_auth_bits: Wegman-Carter tag length
        auth_tags_per_frame: Tags sent per frame
    """

    eps_total: float = EPS_TOTAL
    eps_pe: float = EPS_PE
    eps_cor: float = EPS_COR
    eps_auth: float = EPS_AUTH
    eps_pa: Optional[float] = None
    eps_bar: Optional[float] = None
    leak_ev: int = TAG_VERIFY_BITS
    tag_auth_bits: int = TAG_AUTH_BITS
    auth_tags_per_frame: int = AUTH_TAGS_PER_FRAME

    def __post_init__(self):
        for name in ("eps_total", "eps_pe", "eps_cor", "eps_auth", "eps_pa", "eps_bar"):
            value = getattr(self, name)
            if value is not None:
                validate_fraction(name, value, open_low=True, open_high=True)
        validate_count("leak_ev", self.leak_ev)
        validate_count("tag_auth_bits", self.tag_auth_bits)
        validate_count("auth_tags_per_frame", self.auth_tags_per_frame)

        if self.consumed > self.eps_total:
            raise BudgetError(
                f"ε composition violated: {self.consumed:.3e} > eps_total {self.eps_total:.3e}"
            )

    @property
    def nu_auth(self) -> int:
        """Secret bits consumed by authentication per frame."""
        return self.tag_auth_bits * self.auth_tags_per_frame

    @property
    def fixed(self) -> float:
        """ε terms that are not optimized."""
        return self.eps_pe + self.eps_cor + self.eps_auth

    @property
    def consumed(self) -> float:
        return self.fixed + (self.eps_pa or 0.0) + (self.eps_bar or 0.0)

    @property
    def slack(self) -> float:
        return self.eps_total - self.fixed

    @property
    def is_resolved(self) -> bool:
        return self.eps_pa is not None and self.eps_bar is not None

    def resolved(self, n: int) -> "SecurityBudget":
        """Copy with (eps_bar, eps_pa) optimized for block length n when unset."""
        if self.is_resolved:
            return self
        from qkdlink.security.bounds import optimize_epsilons

        eps_bar, eps_pa = optimize_epsilons(self.eps_total, self.eps_pe, self.eps_cor, self.eps_auth, n)
        return dataclasses.replace(self, eps_bar=eps_bar, eps_pa=eps_pa)


@dataclass(frozen=True)
class LeakageBreakdown:
    """
    Where the n − l_key bits of a frame went (all in bits)

    error_correction + finite_size + verification + authentication
    + estimation + measured_error + multi_photon + rounding = n − unclamped l_key
    """

    error_correction: float
    finite_size: float
    verification: float
    authentication: float
    estimation: float
    measured_error: float
    multi_photon: float
    rounding: float

    CATEGORIES = (
        "error_correction", "finite_size", "verification", "authentication",
        "estimation", "measured_error", "multi_photon", "rounding",
    )

    @property
    def total(self) -> float:
        return sum(getattr(self, c) for c in self.CATEGORIES)

    @property
    def privacy_amplification(self) -> float:
        """The three terms tied to the entropy bound: n·(1 − A(1 − H(q̃/A)))."""
        return self.estimation + self.measured_error + self.multi_photon

    def to_dict(self) -> Dict[str, float]:
        return {c: float(getattr(self, c)) for c in self.CATEGORIES}

    def shares(self) -> Dict[str, float]:
        total = self.total
        return {c: (getattr(self, c) / total if total else 0.0) for c in self.CATEGORIES}


@dataclass(frozen=True)
class KeyLengthResult:
    """
    Outcome of the finite-key length computation for one frame

    `pa_output_length` is the privacy-amplification output before the
    authentication deduction; its first nu_auth bits replenish the
    authentication key pool and the remaining l_key bits are the secret key.
    """

    l_key: int
    unclamped_length: int
    pa_output_length: int
    n: int
    A: float
    q_tilde_used: float
    delta: float
    eps_bar: float
    eps_pa: float
    leak_ec: int
    leak_ev: int
    nu_auth: int
    breakdown: LeakageBreakdown
    qber_too_high: bool = False

    def secret_fraction(self, m: int = 0) -> float:
        """l_key per consumed sifted bit (key bits plus sample)."""
        return self.l_key / (self.n + m)

    def to_dict(self) -> dict:
        out = {
            "l_key": self.l_key,
            "unclamped_length": self.unclamped_length,
            "pa_output_length": self.pa_output_length,
            "n": self.n,
            "A": self.A,
            "q_tilde": self.q_tilde_used,
            "delta": self.delta,
            "eps_bar": self.eps_bar,
            "eps_pa": self.eps_pa,
            "leak_ec": self.leak_ec,
            "leak_ev": self.leak_ev,
            "nu_auth": self.nu_auth,
            "qber_too_high": self.qber_too_high,
        }
        out.update({f"leak_{k}": v for k, v in self.breakdown.to_dict().items()})
        return out
