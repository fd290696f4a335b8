"""
Classical channel: wire format, transports and the key-exchange session.
"""

from qkdlink.net.report import FrameLogRow, SessionReport, leakage_report, read_frame_log, write_frame_log
from qkdlink.net.session import FrameStage, KeySession, Role, SessionState, run_loopback, run_session
from qkdlink.net.transport import MemoryTransport, MessageChannel, TcpTransport, Transport
from qkdlink.net.wire import MessageType, WireMessage, decode_message, encode_message

__all__ = [
    "FrameLogRow",
    "FrameStage",
    "KeySession",
    "MemoryTransport",
    "MessageChannel",
    "MessageType",
    "Role",
    "SessionReport",
    "SessionState",
    "TcpTransport",
    "Transport",
    "WireMessage",
    "decode_message",
    "encode_message",
    "leakage_report",
    "read_frame_log",
    "run_loopback",
    "run_session",
    "write_frame_log",
]
