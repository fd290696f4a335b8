"""
Sifting, frame assembly and finite-sample QBER estimation.
"""

from qkdlink.protocol.estimation import estimate_qber, qber_upper_bound, reconciliation_qber
from qkdlink.protocol.frames import FrameAssembler, SiftedFrame, sample_size
from qkdlink.protocol.sifting import Detections, SiftResult, match_bases, sift, squash_clicks

__all__ = [
    "Detections",
    "FrameAssembler",
    "SiftResult",
    "SiftedFrame",
    "estimate_qber",
    "match_bases",
    "qber_upper_bound",
    "reconciliation_qber",
    "sample_size",
    "sift",
    "squash_clicks",
]
