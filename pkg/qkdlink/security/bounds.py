"""
Security Bounds - Mathematical Functions

Implements the key-length accounting of the single-photon BB84 link:
- Binary entropy
- Multi-photon probability and the GLLP correction factor A
- Finite-size correction Δ and the (ε̄, ε_PA) split that minimizes it
- Finite-key secret length
      l = floor(n·A·(1 − H(q̃/A)) − leak_EC − Δ − leak_EV) − ν_auth
- Asymptotic GLLP rate
      R = raw·sift·max(0, A·(1 − H(q/A)) − f·H(q))

All functions are pure.
"""

from __future__ import annotations

import math
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from qkdlink.exceptions import BudgetError, ParameterError
from qkdlink.security.budget import KeyLengthResult, LeakageBreakdown, SecurityBudget
from qkdlink.utils.validators import validate_count, validate_fraction, validate_non_negative


# =====================================================
# Constants
# =====================================================

DELTA_SQRT_COEFF = 7.0

# Composition slack kept unused so float rounding never breaks the inequality.
COMPOSITION_MARGIN = 1e-9

# Bounds of the logistic split parameter searched by the optimizer.
SPLIT_SEARCH_BOUND = 60.0


# =====================================================
# Entropy and multi-photon accounting
# =====================================================

def binary_entropy(x):
    """
    H(x) = −x·log2(x) − (1−x)·log2(1−x), with H(0) = H(1) = 0

    Accepts scalars or arrays.
    """
    arr = np.asarray(x, dtype=np.float64)
    if np.any((arr < 0.0) | (arr > 1.0)) or np.any(np.isnan(arr)):
        raise ParameterError(f"binary_entropy argument must be in [0, 1], got {x}")

    with np.errstate(divide="ignore", invalid="ignore"):
        h = -arr * np.log2(arr) - (1.0 - arr) * np.log2(1.0 - arr)
    h = np.where((arr == 0.0) | (arr == 1.0), 0.0, h)
    return float(h) if h.ndim == 0 else h


def multi_photon_prob(g2: float, eta_s: float, eta_e: float) -> float:
    """p_m = (η_S·η_E)²·g²(0)/2"""
    validate_fraction("g2", g2)
    validate_fraction("eta_s", eta_s)
    validate_fraction("eta_e", eta_e)
    return (eta_s * eta_e) ** 2 * g2 / 2.0


def gllp_factor(p_m: float, p_det: float) -> float:
    """A = 1 − p_m/p_det"""
    validate_fraction("p_det", p_det, open_low=True)
    validate_non_negative("p_m", p_m)
    if p_m > p_det:
        raise ParameterError(f"p_m must not exceed p_det ({p_det}), got {p_m}")
    return 1.0 - p_m / p_det


# =====================================================
# Finite-size term
# =====================================================

def delta_term(n: int, eps_bar: float, eps_pa: float) -> float:
    """Δ = 7·sqrt(log2(2/ε̄)·n) + log2(1/ε_PA²)"""
    validate_count("n", n, minimum=1)
    validate_fraction("eps_bar", eps_bar, open_low=True, open_high=True)
    validate_fraction("eps_pa", eps_pa, open_low=True, open_high=True)
    return DELTA_SQRT_COEFF * math.sqrt(math.log2(2.0 / eps_bar) * n) + 2.0 * math.log2(1.0 / eps_pa)


def optimize_epsilons(eps_total: float, eps_pe: float, eps_cor: float, eps_auth: float, n: int) -> Tuple[float, float]:
    """
    Split the remaining slack between ε̄ and ε_PA to minimize Δ

    The slack s = eps_total − eps_pe − eps_cor − eps_auth (less a relative
    margin of 1e-9) is divided as ε̄ = s·σ(z), ε_PA = s·(1 − σ(z)) with σ the
    logistic function; z is found by bounded 1-D minimization. The equal
    split is kept if it is not beaten.

    Returns:
        (eps_bar, eps_pa)

    Raises:
        BudgetError: If the fixed terms leave no slack
    """
    validate_count("n", n, minimum=1)
    slack = (eps_total - eps_pe - eps_cor - eps_auth) * (1.0 - COMPOSITION_MARGIN)
    if not slack > 0.0:
        raise BudgetError(
            f"no slack left for eps_bar/eps_pa: eps_total={eps_total:.3e}, "
            f"fixed terms={eps_pe + eps_cor + eps_auth:.3e}"
        )

    def split(z: float) -> Tuple[float, float]:
        share = 1.0 / (1.0 + math.exp(-z))
        return slack * share, slack * (1.0 - share)

    def objective(z: float) -> float:
        eps_bar, eps_pa = split(z)
        if eps_bar <= 0.0 or eps_pa <= 0.0:
            return math.inf
        return delta_term(n, eps_bar, eps_pa)

    best_z = 0.0
    result = minimize_scalar(objective, bounds=(-SPLIT_SEARCH_BOUND, SPLIT_SEARCH_BOUND), method="bounded")
    if result.success and objective(result.x) < objective(best_z):
        best_z = float(result.x)

    return split(best_z)


# =====================================================
# Key length
# =====================================================

def finite_key_length(
    n: int,
    q_tilde: float,
    leak_ec: int,
    leak_ev: int,
    nu_auth: int,
    A: float,
    budget: SecurityBudget,
    q_hat: Optional[float] = None,
) -> KeyLengthResult:
    """
    Secret key length of one frame

    l_key = floor(n·A·(1 − H(q̃/A)) − leak_EC − Δ − leak_EV) − ν_auth, clamped at 0.
    A ratio q̃/A ≥ ½ yields zero key with `qber_too_high` set.

    Args:
        n: Key bits in the frame
        q_tilde: QBER upper bound
        leak_ec: Reconciliation leakage (bits)
        leak_ev: Verification leakage (bits)
        nu_auth: Authentication key consumption (bits)
        A: GLLP factor
        budget: ε budget; (ε̄, ε_PA) are optimized for n if unset
        q_hat: Measured QBER, used only to split the breakdown

    Returns:
        KeyLengthResult with the leakage breakdown
    """
    validate_count("n", n, minimum=1)
    validate_fraction("q_tilde", q_tilde)
    validate_fraction("A", A, open_low=True)
    leak_ec = validate_count("leak_ec", int(leak_ec))
    leak_ev = validate_count("leak_ev", int(leak_ev))
    nu_auth = validate_count("nu_auth", int(nu_auth))

    budget = budget.resolved(n)
    delta = delta_term(n, budget.eps_bar, budget.eps_pa)

    ratio = q_tilde / A
    too_high = ratio >= 0.5
    h_ratio = binary_entropy(min(ratio, 0.5))
    pa_bound = n * A * (1.0 - h_ratio)

    raw = pa_bound - leak_ec - delta - leak_ev
    floored = math.floor(raw)
    unclamped = floored - nu_auth
    l_key = 0 if too_high else max(0, unclamped)
    pa_output = 0 if too_high else max(0, floored)

    q_meas = q_tilde if q_hat is None else min(max(q_hat, 0.0), q_tilde)
    h_tilde = binary_entropy(min(q_tilde, 0.5))
    h_meas = binary_entropy(min(q_meas, 0.5))
    breakdown = LeakageBreakdown(
        error_correction=float(leak_ec),
        finite_size=delta,
        verification=float(leak_ev),
        authentication=float(nu_auth),
        estimation=n * (h_tilde - h_meas),
        measured_error=n * h_meas,
        multi_photon=(n - pa_bound) - n * h_tilde,
        rounding=raw - floored,
    )

    return KeyLengthResult(
        l_key=int(l_key),
        unclamped_length=int(unclamped),
        pa_output_length=int(pa_output),
        n=n,
        A=A,
        q_tilde_used=q_tilde,
        delta=delta,
        eps_bar=budget.eps_bar,
        eps_pa=budget.eps_pa,
        leak_ec=leak_ec,
        leak_ev=leak_ev,
        nu_auth=nu_auth,
        breakdown=breakdown,
        qber_too_high=bool(too_high),
    )


def asymptotic_gllp_rate(raw_rate: float, sift_factor: float, q: float, f: float, A: float) -> float:
    """
    Asymptotic GLLP key rate (bits/s)

    R = raw_rate·sift_factor·max(0, A·(1 − H(q/A)) − f·H(q))
    """
    validate_non_negative("raw_rate", raw_rate)
    validate_fraction("sift_factor", sift_factor, open_low=True)
    validate_fraction("q", q)
    validate_fraction("A", A, open_low=True)
    validate_non_negative("f", f)
    if q >= 0.5:
        return 0.0

    ratio = q / A
    if ratio >= 0.5:
        return 0.0
    per_bit = A * (1.0 - binary_entropy(ratio)) - f * binary_entropy(q)
    return raw_rate * sift_factor * max(0.0, per_bit)
