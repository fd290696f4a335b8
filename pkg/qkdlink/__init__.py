"""
qkdlink - BB84 Link Simulation and Key Post-Processing

Simulates a single-photon BB84 fiber link and turns its detections into
composably secure keys: sifting, finite-sample QBER estimation, rate-adaptive
LDPC reconciliation, error verification, Toeplitz privacy amplification and
Wegman-Carter authentication over a framed classical channel.

Usage:
    from qkdlink import QKDLink, ExperimentConfig

    link = QKDLink(ExperimentConfig(frame_size=20_000, frames=5))

    # Simulated link, records written to out/
    summary = link.simulate()

    # Both peers in-process
    alice, bob = await link.run_loopback()
    assert alice.key_digest == bob.key_digest

    # Key rate versus channel loss
    points = link.sweep("0:30:2")
"""

__version__ = "1.0.0"
__license__ = "MIT"

from qkdlink.exceptions import QKDError
from qkdlink.main import QKDLink
from qkdlink.net.report import SessionReport
from qkdlink.sim.params import SystemParams
from qkdlink.utils.config import ExperimentConfig

__all__ = ["ExperimentConfig", "QKDError", "QKDLink", "SessionReport", "SystemParams"]
