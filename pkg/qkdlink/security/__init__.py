"""
Security mathematics: finite-key length, ε budget and key-rate curves.
"""

from qkdlink.security.bounds import (
    asymptotic_gllp_rate,
    binary_entropy,
    delta_term,
    finite_key_length,
    gllp_factor,
    multi_photon_prob,
    optimize_epsilons,
)
from qkdlink.security.budget import KeyLengthResult, LeakageBreakdown, SecurityBudget
from qkdlink.security.curves import CurvePoint, QberModel, rate_vs_loss_curve

__all__ = [
    "CurvePoint",
    "KeyLengthResult",
    "LeakageBreakdown",
    "QberModel",
    "SecurityBudget",
    "asymptotic_gllp_rate",
    "binary_entropy",
    "delta_term",
    "finite_key_length",
    "gllp_factor",
    "multi_photon_prob",
    "optimize_epsilons",
    "rate_vs_loss_curve",
]
