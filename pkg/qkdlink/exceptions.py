"""
qkdlink Exceptions

Every failure raised by the package derives from QKDError so callers can
catch the whole family at a session or command boundary.
"""

from typing import Optional


class QKDError(Exception):
    """Base class for all qkdlink errors."""


class ParameterError(QKDError, ValueError):
    """An input value is out of its documented range."""


class ConfigError(ParameterError):
    """Experiment configuration is malformed, has unknown keys or points at missing files."""


class SchemaError(QKDError):
    """A versioned CSV file does not carry the expected schema header or columns."""


class SynchronizationError(QKDError):
    """Alice's pulse records and Bob's clicks do not share a pulse indexing."""


class EstimationError(QKDError):
    """QBER estimation was requested on an empty sample."""


class ConstructionError(QKDError):
    """An LDPC code cannot be built from the requested degree distribution."""


class DecodeFailure(QKDError):
    """
    Belief propagation did not reach the target syndrome.

    The caller decides between a retry at a lower rate and a frame discard.
    """

    def __init__(self, message: str, iterations: int = 0):
        super().__init__(message)
        self.iterations = iterations


class UnsupportedRateError(QKDError):
    """The estimated QBER lies outside the range the code set can reconcile."""


class BudgetError(QKDError):
    """The epsilon budget does not compose or leaves no slack."""


class ProtocolError(QKDError):
    """A wire message is malformed, of unknown type, or out of sequence."""


class AuthenticationError(QKDError):
    """A Wegman-Carter tag failed to verify."""


class KeyMaterialExhausted(QKDError):
    """The authentication key ledger cannot cover the requested bits."""


class TransportClosed(QKDError):
    """The peer closed the byte stream or the connection dropped."""


class SessionAborted(QKDError):
    """
    The session stopped before completing its frames.

    `reason` is the short machine-readable cause also carried in the ABORT message.
    """

    def __init__(self, reason: str, detail: Optional[str] = None):
        super().__init__(f"session aborted: {reason}" + (f" ({detail})" if detail else ""))
        self.reason = reason
        self.detail = detail
