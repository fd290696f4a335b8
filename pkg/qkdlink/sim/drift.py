"""
Polarization Drift and Compensation

The fiber applies a slowly varying polarization transform, abstracted as two
rotation angles. The receiver's compensator subtracts its own two settings;
the residual rotation adds a wrong-detector probability on top of the
intrinsic misalignment.

The walk is stored in units of the amplitude (each coordinate in [-1, 1]),
so for a fixed seed the rotation scales linearly with the amplitude.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from qkdlink.sim.source import STREAM_DRIFT, STREAM_SCAN, derive_seed
from qkdlink.utils.logger import logger
from qkdlink.utils.validators import validate_non_negative


# =====================================================
# Compensator tuning
# =====================================================

TRIGGER_MARGIN_QBER = 0.005  # fixed margin above the intrinsic QBER
TRIGGER_SIGMAS = 4.0         # binomial standard errors on top of the margin
HISTORY_WINDOW = 8           # chunks pooled per trigger decision
TRIAL_CLICKS = 20_000        # matched clicks counted per trial setting
INITIAL_STEP_RAD = 0.05
MIN_STEP_RAD = 1e-3
MAX_EVALUATIONS = 200
SCAN_PENALTY_QBER = 0.05     # extra error while the scan tries settings


@dataclass(frozen=True)
class DriftState:
    """
    Drift model state

    Attributes:
        amplitude_rad: Maximum rotation per axis
        step_sigma: Random-walk σ per sqrt(second), in units of the amplitude
        walk: Normalized rotation per axis, each in [-1, 1]
        compensator: Compensator settings (rad)
        seed: Drift stream seed
        steps: Number of steps taken (keys the per-step generator)
        time_s: Simulated time
        scanning: A compensation scan is in progress; clicks are marked for discard
        scan_count: Scans performed so far
    """

    amplitude_rad: float = 0.0
    step_sigma: float = 0.05
    walk: Tuple[float, float] = (0.0, 0.0)
    compensator: Tuple[float, float] = (0.0, 0.0)
    seed: int = 0
    steps: int = 0
    time_s: float = 0.0
    scanning: bool = False
    scan_count: int = 0

    def __post_init__(self):
        validate_non_negative("amplitude_rad", self.amplitude_rad)
        validate_non_negative("step_sigma", self.step_sigma)

    @property
    def rotation(self) -> np.ndarray:
        return self.amplitude_rad * np.asarray(self.walk, dtype=np.float64)

    @property
    def residual(self) -> np.ndarray:
        return self.rotation - np.asarray(self.compensator, dtype=np.float64)

    def qber_contribution(self) -> float:
        """Wrong-detector probability from the residual rotation: mean of sin² over both axes."""
        return residual_qber(self.residual)

    def error_probability(self, misalignment_qber: float) -> float:
        """Total wrong-detector probability for a matched-basis photon."""
        q = misalignment_qber + self.qber_contribution()
        if self.scanning:
            q += SCAN_PENALTY_QBER
        return float(min(q, 0.5))


def residual_qber(residual: np.ndarray) -> float:
    return float(np.mean(np.sin(np.asarray(residual)) ** 2))


def _reflect(x: np.ndarray) -> np.ndarray:
    """Fold values back into [-1, 1]."""
    x = np.mod(x + 1.0, 4.0)
    return np.where(x > 2.0, 4.0 - x, x) - 1.0


def step_drift(drift: DriftState, dt_s: float) -> DriftState:
    """
    Advance the bounded random walk by dt_s

    Args:
        drift: Current state
        dt_s: Elapsed time (≥ 0)

    Returns:
        New DriftState; unchanged when dt_s is 0 or the amplitude is 0
    """
    validate_non_negative("dt_s", dt_s)
    if dt_s == 0.0:
        return drift

    rng = np.random.default_rng(derive_seed(drift.seed, STREAM_DRIFT, drift.steps))
    kick = rng.normal(0.0, drift.step_sigma * np.sqrt(dt_s), size=2)
    walk = _reflect(np.asarray(drift.walk) + kick)

    return dataclasses.replace(
        drift,
        walk=(float(walk[0]), float(walk[1])),
        steps=drift.steps + 1,
        time_s=drift.time_s + dt_s,
    )


def scan_threshold(baseline_qber: float, n_matched: int) -> float:
    """Pooled QBER above which a window of n_matched clicks starts a scan."""
    p = min(max(baseline_qber, 1e-3), 0.5)
    sigma = np.sqrt(p * (1.0 - p) / max(n_matched, 1))
    return baseline_qber + TRIGGER_MARGIN_QBER + TRIGGER_SIGMAS * float(sigma)


def compensate(
    drift: DriftState,
    click_error_history: Sequence[Tuple[int, int]],
    baseline_qber: float = 0.0,
    window: int = HISTORY_WINDOW,
    trial_clicks: Optional[int] = None,
) -> DriftState:
    """
    Coordinate-descent compensation

    click_error_history holds (matched clicks, errors) per chunk, oldest
    first, and must not include chunks taken during a scan. Once `window`
    chunks are available their pooled QBER is compared with scan_threshold;
    above it, the compensator scans both axes with a shrinking step. Every
    trial setting is scored by counting errors over a trial window of
    matched clicks, so the result is only as good as those estimates.

    A state that is still marked as scanning only has the mark cleared: the
    chunk after a scan is the scan window itself.

    Args:
        drift: Current state
        click_error_history: Per-chunk (matched, errors) counts
        baseline_qber: Intrinsic QBER expected with a perfect compensator
        window: Chunks pooled per decision
        trial_clicks: Matched clicks per trial setting (TRIAL_CLICKS if None)

    Returns:
        Updated DriftState
    """
    if drift.scanning:
        return dataclasses.replace(drift, scanning=False)

    recent = list(click_error_history)[-window:]
    if len(recent) < window:
        return drift
    matched = sum(int(m) for m, _ in recent)
    errors = sum(int(e) for _, e in recent)
    if matched == 0:
        return drift
    pooled = errors / matched
    threshold = scan_threshold(baseline_qber, matched)
    if pooled <= threshold:
        return drift

    trial_clicks = TRIAL_CLICKS if trial_clicks is None else trial_clicks
    rng = np.random.default_rng(derive_seed(drift.seed, STREAM_SCAN, drift.scan_count))
    rotation = drift.rotation

    def measure(setting: np.ndarray) -> float:
        q = min(baseline_qber + residual_qber(rotation - setting), 0.5)
        return rng.binomial(trial_clicks, q) / trial_clicks

    setting = np.asarray(drift.compensator, dtype=np.float64).copy()
    best = measure(setting)
    step = INITIAL_STEP_RAD
    evaluations = 1

    while step >= MIN_STEP_RAD and evaluations < MAX_EVALUATIONS:
        improved = False
        for axis in (0, 1):
            for sign in (1.0, -1.0):
                trial = setting.copy()
                trial[axis] += sign * step
                q = measure(trial)
                evaluations += 1
                if q < best:
                    setting, best, improved = trial, q, True
                    break
        if not improved:
            step /= 2.0
            # a lucky low reading would otherwise block every later move
            best = measure(setting)
            evaluations += 1

    logger.debug(
        "polarization_scan",
        pooled_qber=round(pooled, 5),
        threshold=round(threshold, 5),
        measured_qber=best,
        evaluations=evaluations,
    )

    return dataclasses.replace(
        drift,
        compensator=(float(setting[0]), float(setting[1])),
        scanning=True,
        scan_count=drift.scan_count + 1,
    )
