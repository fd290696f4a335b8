"""
LDPC codes for syndrome-based information reconciliation.
"""

from qkdlink.ldpc.adapt import CodeSet, RateAdaptConfig, select_rate, target_rate
from qkdlink.ldpc.code import LdpcCode, measure_girth
from qkdlink.ldpc.decoder import DecodeResult, decode, decode_llr
from qkdlink.ldpc.peg import BASE_RATES, load_distribution, peg_construct
from qkdlink.ldpc.reconcile import (
    EfficiencyReport,
    ReconcileOutcome,
    Reconciler,
    SyndromeMessage,
    measure_efficiency,
)
from qkdlink.ldpc.store import CodeStore, DirectoryCodeStore, MemoryCodeStore, create_code_store

__all__ = [
    "BASE_RATES",
    "CodeSet",
    "CodeStore",
    "DecodeResult",
    "DirectoryCodeStore",
    "EfficiencyReport",
    "LdpcCode",
    "MemoryCodeStore",
    "RateAdaptConfig",
    "ReconcileOutcome",
    "Reconciler",
    "SyndromeMessage",
    "create_code_store",
    "decode",
    "decode_llr",
    "load_distribution",
    "measure_efficiency",
    "measure_girth",
    "peg_construct",
    "select_rate",
    "target_rate",
]
