"""
Code Store

Caches constructed LDPC codes; PEG construction of a frame-size code takes
seconds to minutes, so a session builds each base code once.

Implementations:
- DirectoryCodeStore (alist files, shared between runs and peers)
- MemoryCodeStore (process lifetime)
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Dict, Optional, Union

from qkdlink.ldpc.code import LdpcCode
from qkdlink.utils.logger import logger


def code_key(rate: float, block_len: int, seed: int) -> str:
    """Stable name of a PEG base code."""
    return f"peg-r{int(round(rate * 100)):03d}-n{block_len}-s{seed}"


class CodeStore:
    """
    Abstract code store interface

    Implementations:
    - DirectoryCodeStore
    - MemoryCodeStore
    """

    def get(self, key: str) -> Optional[LdpcCode]:
        raise NotImplementedError

    def put(self, key: str, code: LdpcCode) -> None:
        raise NotImplementedError

    def exists(self, key: str) -> bool:
        raise NotImplementedError


class MemoryCodeStore(CodeStore):
    def __init__(self):
        self._codes: Dict[str, LdpcCode] = {}

    def get(self, key: str) -> Optional[LdpcCode]:
        return self._codes.get(key)

    def put(self, key: str, code: LdpcCode) -> None:
        self._codes[key] = code

    def exists(self, key: str) -> bool:
        return key in self._codes


class DirectoryCodeStore(CodeStore):
    """
    alist files in a directory

    Usage:
        store = DirectoryCodeStore("codes/")
        store.put(code_key(0.7, 11000, 1), code)
        code = store.get(code_key(0.7, 11000, 1))

    Loaded codes keep their design rate from the key; the degree
    distribution is not stored.
    """

    def __init__(self, directory: Union[str, Path]):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        # Loaded codes stay in memory as well.
        self._loaded: Dict[str, LdpcCode] = {}

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.alist"

    def get(self, key: str) -> Optional[LdpcCode]:
        if key in self._loaded:
            return self._loaded[key]
        path = self._path(key)
        if not path.exists():
            return None
        rate = int(key.split("-r", 1)[1][:3]) / 100 if "-r" in key else None
        code = LdpcCode.read_alist(path, design_rate=rate)
        self._loaded[key] = code
        logger.debug("code_loaded", key=key, path=str(path))
        return code

    def put(self, key: str, code: LdpcCode) -> None:
        path = self._path(key)
        tmp = path.with_suffix(".alist.tmp")
        code.write_alist(tmp)
        os.replace(tmp, path)
        self._loaded[key] = code

    def exists(self, key: str) -> bool:
        return key in self._loaded or self._path(key).exists()


def create_code_store(code_dir: Optional[Union[str, Path]] = None) -> CodeStore:
    """
    Factory for the code cache

    Args:
        code_dir: Directory for alist files; None keeps codes in memory

    Returns:
        DirectoryCodeStore if code_dir is given, else MemoryCodeStore
    """
    if code_dir:
        return DirectoryCodeStore(code_dir)
    return MemoryCodeStore()
