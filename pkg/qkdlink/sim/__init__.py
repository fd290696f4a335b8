"""
Physical-layer simulation: source, encoder, channel, drift and receiver.
"""

from qkdlink.sim.channel import transmit_and_detect
from qkdlink.sim.drift import DriftState, compensate, scan_threshold, step_drift
from qkdlink.sim.link import LinkChunk, LinkSimulator, SimulationSummary, simulate_to_files
from qkdlink.sim.params import SystemParams
from qkdlink.sim.records import Basis, ClickRecord, ClickTrain, PulseRecord, PulseTrain
from qkdlink.sim.source import emit_pulses, encode_burst, estimate_g2

__all__ = [
    "Basis",
    "ClickRecord",
    "ClickTrain",
    "DriftState",
    "LinkChunk",
    "LinkSimulator",
    "PulseRecord",
    "PulseTrain",
    "SimulationSummary",
    "SystemParams",
    "compensate",
    "emit_pulses",
    "encode_burst",
    "estimate_g2",
    "scan_threshold",
    "simulate_to_files",
    "step_drift",
    "transmit_and_detect",
]
