"""qkdlink utilities"""

from qkdlink.utils.logger import logger, setup_logger
from qkdlink.utils.validators import (
    validate_bits,
    validate_count,
    validate_distribution,
    validate_fraction,
    validate_non_negative,
)

__all__ = [
    "logger",
    "setup_logger",
    "validate_bits",
    "validate_count",
    "validate_distribution",
    "validate_fraction",
    "validate_non_negative",
]
