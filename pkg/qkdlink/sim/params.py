"""
System Parameters

The physical parameter chain of the link: source, encoder, fiber channel and
receiver. Defaults are the field-trial operating point.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

from qkdlink.exceptions import ParameterError
from qkdlink.utils.validators import validate_count, validate_fraction, validate_non_negative


# =====================================================
# Defaults (field-trial operating point)
# =====================================================

SOURCE_RATE_HZ = 72.6e6
ETA_QD = 0.165
ETA_TRANSPORT = 0.71
ETA_FC = 0.50
G2 = 0.0047
ETA_ENCODER = 0.55
CHANNEL_LOSS_DB = 9.6
ETA_RECEIVER = 0.114
DETECTOR_EFFICIENCY = 0.83
DARK_COUNT_HZ = 50.0
DEAD_TIME_S = 33e-9
TEMPORAL_WINDOW_S = 1e-9
BURST_LEN = 605

# Intrinsic (encoder) share of the total system QBER.
MISALIGNMENT_QBER = 0.0325
JITTER_S = 50e-12

NUM_DETECTORS = 4
RELATIVE_TOLERANCE = 1e-12


def loss_to_transmission(loss_db: float) -> float:
    """η = 10^(−loss/10)"""
    return 10.0 ** (-loss_db / 10.0)


@dataclass(frozen=True)
class SystemParams:
    """
    Physical parameter chain

    Attributes:
        source_rate_hz: Pulse repetition rate ν_S
        eta_qd, eta_transport, eta_fc: Source stage efficiencies
        eta_source_cband: η_S = eta_qd·eta_transport·eta_fc (derived when omitted)
        g2: Second-order correlation at zero delay
        eta_encoder: Polarization encoder transmission η_E
        channel_loss_db: Fiber loss
        eta_channel: η_QC = 10^(−loss/10) (derived when omitted)
        eta_receiver: Receiver transmission η_R, detector efficiency included
        detector_efficiency: p_det
        dark_count_hz: Dark count rate per detector
        dead_time_s: Dead time per detector
        temporal_window_s: Acceptance gate around the expected arrival
        burst_len: Pulses modulated per trigger
        misalignment_qber: Intrinsic wrong-detector probability
        jitter_s: Gaussian timing jitter σ of photon arrivals
        basis_ratio: Probability of preparing the X basis
    """

    source_rate_hz: float = SOURCE_RATE_HZ
    eta_qd: float = ETA_QD
    eta_transport: float = ETA_TRANSPORT
    eta_fc: float = ETA_FC
    eta_source_cband: Optional[float] = None
    g2: float = G2
    eta_encoder: float = ETA_ENCODER
    channel_loss_db: float = CHANNEL_LOSS_DB
    eta_channel: Optional[float] = None
    eta_receiver: float = ETA_RECEIVER
    detector_efficiency: float = DETECTOR_EFFICIENCY
    dark_count_hz: float = DARK_COUNT_HZ
    dead_time_s: float = DEAD_TIME_S
    temporal_window_s: float = TEMPORAL_WINDOW_S
    burst_len: int = BURST_LEN
    misalignment_qber: float = MISALIGNMENT_QBER
    jitter_s: float = JITTER_S
    basis_ratio: float = 0.5

    def __post_init__(self):
        for name in ("eta_qd", "eta_transport", "eta_fc", "g2", "eta_encoder",
                     "eta_receiver", "detector_efficiency", "misalignment_qber"):
            validate_fraction(name, getattr(self, name))
        validate_fraction("basis_ratio", self.basis_ratio, open_low=True, open_high=True)
        for name in ("source_rate_hz", "dark_count_hz", "dead_time_s",
                     "temporal_window_s", "jitter_s"):
            validate_non_negative(name, getattr(self, name))
        # infinite loss is a cut fiber (η_QC = 0)
        if not self.channel_loss_db >= 0.0:
            raise ParameterError(f"channel_loss_db must be non-negative, got {self.channel_loss_db}")
        validate_count("burst_len", self.burst_len, minimum=1)
        if self.source_rate_hz <= 0:
            raise ParameterError(f"source_rate_hz must be positive, got {self.source_rate_hz}")

        product = self.eta_qd * self.eta_transport * self.eta_fc
        self._derive("eta_source_cband", product)
        self._derive("eta_channel", loss_to_transmission(self.channel_loss_db))

    def _derive(self, name: str, expected: float) -> None:
        given = getattr(self, name)
        if given is None:
            object.__setattr__(self, name, expected)
            return
        validate_fraction(name, given)
        if abs(given - expected) > RELATIVE_TOLERANCE * max(abs(expected), 1e-300):
            raise ParameterError(f"{name} must equal its component product {expected!r}, got {given!r}")

    # =====================================================
    # Derived quantities
    # =====================================================

    @property
    def pulse_period_s(self) -> float:
        return 1.0 / self.source_rate_hz

    @property
    def eta_channel_input(self) -> float:
        """Probability that a pulse carries at least one photon into the fiber."""
        return self.eta_source_cband * self.eta_encoder

    @property
    def two_photon_probability(self) -> float:
        """p_m = g²·η²/2 at the channel input."""
        return self.g2 * self.eta_channel_input ** 2 / 2.0

    def detection_probability(self) -> float:
        """Signal click probability per pulse: η_S·η_E·η_QC·η_R."""
        return self.eta_channel_input * self.eta_channel * self.eta_receiver

    def dark_probability(self) -> float:
        """Probability per pulse slot that any of the four detectors fires from darkness."""
        return NUM_DETECTORS * self.dark_count_hz * self.temporal_window_s

    def mean_click_rate(self) -> float:
        """Analytic click rate (1/s), dead time neglected."""
        return self.source_rate_hz * (self.detection_probability() + self.dark_probability())

    def with_loss(self, loss_db: float) -> "SystemParams":
        """Copy with a different channel loss; η_QC is re-derived."""
        return dataclasses.replace(self, channel_loss_db=loss_db, eta_channel=None)

    def replace(self, **changes) -> "SystemParams":
        """
        Copy with changes; derived efficiencies are recomputed unless given.
        """
        if any(k in changes for k in ("eta_qd", "eta_transport", "eta_fc")):
            changes.setdefault("eta_source_cband", None)
        if "channel_loss_db" in changes:
            changes.setdefault("eta_channel", None)
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


PARAM_FIELDS = tuple(f.name for f in dataclasses.fields(SystemParams))
