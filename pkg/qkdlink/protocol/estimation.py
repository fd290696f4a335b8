"""
QBER Estimation

Maximum-likelihood estimate from the disclosed sample and its finite-sample
upper bound:

    q̃ = q̂ + ½·sqrt((2·ln(1/ε_pe) + 2·ln(m+1)) / m),   clamped to ≤ ½
"""

import math

import numpy as np

from qkdlink.exceptions import EstimationError, ParameterError
from qkdlink.utils.validators import validate_count, validate_fraction


def estimate_qber(alice_sample, bob_sample) -> float:
    """
    q̂ = mismatches / m

    Raises:
        EstimationError: If the sample is empty
        ParameterError: If the two samples differ in length
    """
    a = np.asarray(alice_sample, dtype=np.uint8).ravel()
    b = np.asarray(bob_sample, dtype=np.uint8).ravel()
    if a.size != b.size:
        raise ParameterError(f"samples differ in length ({a.size} vs {b.size})")
    if a.size == 0:
        raise EstimationError("cannot estimate QBER from an empty sample")
    return float(np.count_nonzero(a != b)) / a.size


def sampling_penalty(m: int, eps_pe: float) -> float:
    """The additive finite-sample term of q̃."""
    m = validate_count("m", m, minimum=1)
    validate_fraction("eps_pe", eps_pe, open_low=True, open_high=True)
    return 0.5 * math.sqrt((2.0 * math.log(1.0 / eps_pe) + 2.0 * math.log(m + 1.0)) / m)


def qber_upper_bound(q_hat: float, m: int, eps_pe: float) -> float:
    """
    Upper confidence bound on the QBER of the unseen key bits

    Args:
        q_hat: Sample QBER
        m: Sample size
        eps_pe: Parameter-estimation failure probability

    Returns:
        q̃, never above 0.5
    """
    validate_fraction("q_hat", q_hat)
    return min(0.5, q_hat + sampling_penalty(m, eps_pe))


RECONCILE_SIGMAS = 1.0


def reconciliation_qber(q_hat: float, m: int, sigmas: float = RECONCILE_SIGMAS) -> float:
    """
    QBER the reconciliation rate is planned for

    q̂ plus `sigmas` binomial standard errors of an m-bit sample. A zero
    estimate is treated as one error in m so the margin never vanishes.
    """
    validate_fraction("q_hat", q_hat)
    m = validate_count("m", m, minimum=1)
    q = max(q_hat, 1.0 / m)
    return min(0.5, q_hat + sigmas * math.sqrt(q * (1.0 - q) / m))
