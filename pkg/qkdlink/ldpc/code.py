"""
LDPC Code

Parity-check matrix H (checks × variables) over GF(2), stored as a
scipy CSR matrix, plus the edge arrays the decoder iterates over.
Reads and writes the alist text format.
"""

from __future__ import annotations

from collections import deque
from functools import cached_property
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from qkdlink.exceptions import ConstructionError, ParameterError
from qkdlink.utils.validators import validate_bits


class LdpcCode:
    """
    Binary LDPC code

    Attributes:
        H: CSR parity-check matrix, shape (n_checks, block_len)
        design_rate: Nominal rate the code was built for
        distribution: Variable degree distribution (node perspective), if known
        seed: Construction seed, if built by PEG
    """

    def __init__(
        self,
        H,
        design_rate: Optional[float] = None,
        distribution: Optional[Dict[int, float]] = None,
        seed: Optional[int] = None,
    ):
        H = sparse.csr_matrix(H, dtype=np.uint8)
        H.sum_duplicates()
        H.data %= 2
        H.eliminate_zeros()
        H.sort_indices()
        if H.shape[0] < 1 or H.shape[1] < 1:
            raise ConstructionError(f"empty parity-check matrix {H.shape}")

        self.H = H
        self.design_rate = self.code_rate if design_rate is None else float(design_rate)
        self.distribution = dict(distribution) if distribution else None
        self.seed = seed

        # Edges in check-major order; segment offsets feed np.add.reduceat.
        coo = H.tocoo()
        order = np.lexsort((coo.col, coo.row))
        self.edge_check = coo.row[order].astype(np.int64)
        self.edge_var = coo.col[order].astype(np.int64)
        self.check_ptr = H.indptr[:-1].astype(np.int64)

        if np.any(self.check_degrees == 0):
            raise ConstructionError("every check node needs at least one edge")

    def __repr__(self) -> str:
        return (f"LdpcCode(n={self.block_len}, checks={self.n_checks}, "
                f"rate={self.code_rate:.4f}, edges={self.n_edges})")

    @property
    def block_len(self) -> int:
        return int(self.H.shape[1])

    @property
    def n_checks(self) -> int:
        return int(self.H.shape[0])

    @property
    def n_edges(self) -> int:
        return int(self.H.nnz)

    @property
    def code_rate(self) -> float:
        """R = 1 − checks/variables"""
        return 1.0 - self.n_checks / self.block_len

    @cached_property
    def variable_degrees(self) -> np.ndarray:
        return np.bincount(self.edge_var, minlength=self.block_len)

    @cached_property
    def check_degrees(self) -> np.ndarray:
        return np.diff(self.H.indptr)

    def syndrome(self, bits) -> np.ndarray:
        """
        s = H·x over GF(2)

        Raises:
            ParameterError: If len(bits) != block_len
        """
        x = validate_bits("bits", bits, self.block_len)
        return (self.H @ x.astype(np.int64) % 2).astype(np.uint8)

    def is_connected(self) -> bool:
        """True if the Tanner graph has a single component."""
        n_comp, _ = connected_components(self.tanner_graph(), directed=False)
        return n_comp == 1

    def tanner_graph(self) -> sparse.csr_matrix:
        """Symmetric adjacency of the bipartite graph; variables first, then checks."""
        return sparse.bmat([[None, self.H.T], [self.H, None]], format="csr")

    @cached_property
    def girth(self) -> Optional[int]:
        return measure_girth(self)

    # =====================================================
    # alist format
    # =====================================================

    def to_alist(self) -> str:
        """
        alist text: dimensions, max degrees, degree lists, then 1-based
        neighbor lists per variable and per check (zero-padded).
        """
        m, n = self.n_checks, self.block_len
        csc = self.H.tocsc()
        col_deg = self.variable_degrees
        row_deg = self.check_degrees
        max_col, max_row = int(col_deg.max()), int(row_deg.max())

        lines = [f"{n} {m}", f"{max_col} {max_row}",
                 " ".join(map(str, col_deg)), " ".join(map(str, row_deg))]
        for j in range(n):
            rows = (csc.indices[csc.indptr[j]:csc.indptr[j + 1]] + 1).tolist()
            lines.append(" ".join(map(str, rows + [0] * (max_col - len(rows)))))
        for i in range(m):
            cols = (self.H.indices[self.H.indptr[i]:self.H.indptr[i + 1]] + 1).tolist()
            lines.append(" ".join(map(str, cols + [0] * (max_row - len(cols)))))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_alist(cls, text: str, **kwargs) -> "LdpcCode":
        """
        Parse alist text

        Raises:
            ConstructionError: If the text is malformed or inconsistent
        """
        try:
            tokens = [int(t) for t in text.split()]
            n, m = tokens[0], tokens[1]
            pos = 4
            col_deg = tokens[pos:pos + n]
            pos += n
            row_deg = tokens[pos:pos + m]
            pos += m
            max_col = tokens[2]
            rows, cols = [], []
            for j in range(n):
                entries = tokens[pos:pos + max_col]
                pos += max_col
                nz = [e - 1 for e in entries if e > 0]
                if len(nz) != col_deg[j]:
                    raise ConstructionError(f"column {j + 1}: degree {col_deg[j]} but {len(nz)} entries")
                rows.extend(nz)
                cols.extend([j] * len(nz))
        except (IndexError, ValueError) as exc:
            raise ConstructionError(f"malformed alist: {exc}") from exc

        H = sparse.csr_matrix((np.ones(len(rows), dtype=np.uint8), (rows, cols)), shape=(m, n))
        if not np.array_equal(np.diff(H.indptr), np.asarray(row_deg)):
            raise ConstructionError("alist row degrees disagree with column lists")
        return cls(H, **kwargs)

    def write_alist(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.to_alist())

    @classmethod
    def read_alist(cls, path: Union[str, Path], **kwargs) -> "LdpcCode":
        return cls.from_alist(Path(path).read_text(), **kwargs)


def measure_girth(code: LdpcCode, max_roots: Optional[int] = None) -> Optional[int]:
    """
    Length of the shortest cycle in the Tanner graph

    BFS from every node (or from the first max_roots variable nodes, which
    gives an upper bound on large codes).

    Returns:
        Girth, or None for a cycle-free graph
    """
    adj = code.tanner_graph()
    indptr, indices = adj.indptr, adj.indices
    n_nodes = adj.shape[0]
    roots = range(n_nodes) if max_roots is None else range(min(max_roots, code.block_len))
    if max_roots is not None and max_roots < 1:
        raise ParameterError("max_roots must be >= 1")

    best = None
    dist = np.full(n_nodes, -1, dtype=np.int64)
    parent = np.full(n_nodes, -1, dtype=np.int64)
    for root in roots:
        touched = [root]
        dist[root] = 0
        queue = deque([root])
        while queue:
            u = queue.popleft()
            if best is not None and 2 * dist[u] + 1 >= best:
                break
            for v in indices[indptr[u]:indptr[u + 1]]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    parent[v] = u
                    touched.append(v)
                    queue.append(v)
                elif v != parent[u]:
                    cycle = int(dist[u] + dist[v] + 1)
                    if best is None or cycle < best:
                        best = cycle
        dist[touched] = -1
        parent[touched] = -1
    return best
