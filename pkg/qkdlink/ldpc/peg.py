"""
Progressive Edge Growth

Builds a parity-check matrix one edge at a time. Each new edge of a
variable node goes to a check node as far away as possible in the current
Tanner graph (the complement of its BFS neighbourhood), choosing the
lowest-degree candidate. The first edge of a node goes to a globally
lowest-degree check. Ties break by a seeded random priority
whose starting point moves with every edge.

The BFS runs level by level on padded numpy adjacency arrays. Each variable is
expanded at most once per search, so one search costs O(edges). Full-depth
search is used for small codes; above AUTO_DEPTH_LIMIT variables the search
stops after AUTO_MAX_DEPTH levels. Excluding every check within d levels
keeps all cycles through the new edge at length 2d + 4 or more.
"""

from __future__ import annotations

import math
from importlib import resources
from pathlib import Path
from typing import Dict, Iterable, Optional, Tuple, Union

import numpy as np
from scipy import sparse

from qkdlink.exceptions import ConstructionError, ParameterError
from qkdlink.ldpc.code import LdpcCode
from qkdlink.utils.logger import logger
from qkdlink.utils.validators import validate_count, validate_distribution, validate_fraction


MIN_BLOCK_LEN = 100
AUTO_DEPTH_LIMIT = 16384
AUTO_MAX_DEPTH = 2

BASE_RATES = (0.65, 0.70, 0.75, 0.80, 0.85, 0.90)


# =====================================================
# Degree distributions
# =====================================================

def parse_distribution(text: str) -> Dict[int, float]:
    """Plain-text (degree, fraction) pairs, one per line, '#' comments."""
    pairs = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParameterError(f"distribution line must be 'degree fraction', got {line!r}")
        pairs.append((int(parts[0]), float(parts[1])))
    return validate_distribution("degree distribution", pairs)


def distribution_file(rate: float) -> str:
    return f"rate_{int(round(rate * 100)):03d}.dd"


def load_distribution(source: Union[float, str, Path]) -> Dict[int, float]:
    """
    Load a variable degree distribution

    Args:
        source: A base rate (one of BASE_RATES, loads the shipped file) or a path
    """
    if isinstance(source, (int, float)) and not isinstance(source, bool):
        name = distribution_file(float(source))
        try:
            text = resources.files("qkdlink.ldpc").joinpath("data", name).read_text()
        except FileNotFoundError as exc:
            raise ParameterError(f"no shipped distribution for rate {source}") from exc
        return parse_distribution(text)
    return parse_distribution(Path(source).read_text())


def load_distribution_dir(directory: Optional[Union[str, Path]],
                          rates: Iterable[float] = BASE_RATES) -> Dict[float, Dict[int, float]]:
    """User distributions named like the shipped ones; rates without a file are skipped."""
    if directory is None:
        return {}
    found = {}
    for rate in rates:
        path = Path(directory) / distribution_file(rate)
        if path.exists():
            found[rate] = load_distribution(path)
    return found


def degree_sequence(block_len: int, distribution: Dict[int, float]) -> np.ndarray:
    """
    Integer variable degrees realizing the distribution

    Counts are floor(fraction·n); the remaining nodes go to the degrees with
    the largest fractional parts (ties to the lower degree). Returned in
    nondecreasing order.
    """
    degrees = sorted(distribution)
    exact = np.array([distribution[d] * block_len for d in degrees])
    counts = np.floor(exact).astype(np.int64)
    remainder = block_len - int(counts.sum())
    for i in np.argsort(-(exact - counts), kind="stable")[:remainder]:
        counts[i] += 1
    return np.repeat(np.array(degrees, dtype=np.int64), counts)


# =====================================================
# Construction
# =====================================================

class _PegGraph:
    """Growing Tanner graph with padded adjacency arrays."""

    def __init__(self, n_vars: int, n_checks: int, max_var_degree: int):
        self.var_checks = np.full((n_vars, max_var_degree), -1, dtype=np.int64)
        self.var_fill = np.zeros(n_vars, dtype=np.int64)
        width = max(4, 2 * math.ceil(n_vars * max_var_degree / n_checks))
        self.check_vars = np.full((n_checks, width), -1, dtype=np.int64)
        self.check_degree = np.zeros(n_checks, dtype=np.int64)

    def add_edge(self, v: int, c: int) -> None:
        self.var_checks[v, self.var_fill[v]] = c
        self.var_fill[v] += 1
        if self.check_degree[c] == self.check_vars.shape[1]:
            grow = np.full_like(self.check_vars, -1)
            self.check_vars = np.concatenate([self.check_vars, grow], axis=1)
        self.check_vars[c, self.check_degree[c]] = v
        self.check_degree[c] += 1

    def checks_of(self, v: int) -> np.ndarray:
        return self.var_checks[v, :self.var_fill[v]]

    def expand(self, frontier: np.ndarray, seen_vars: np.ndarray) -> np.ndarray:
        """Checks one level beyond the frontier checks (with repeats), skipping seen variables."""
        variables = self.check_vars[frontier].ravel()
        variables = variables[variables >= 0]
        variables = variables[~seen_vars[variables]]
        seen_vars[variables] = True
        checks = self.var_checks[variables].ravel()
        return checks[checks >= 0]


def _candidates(graph: _PegGraph, v: int, max_depth: Optional[int]) -> np.ndarray:
    """Boolean mask of admissible checks for the next edge of v."""
    n_checks = graph.check_degree.size
    reached = np.zeros(n_checks, dtype=bool)
    frontier = graph.checks_of(v)
    reached[frontier] = True
    n_reached = int(frontier.size)
    seen_vars = np.zeros(graph.var_fill.size, dtype=bool)
    seen_vars[v] = True

    depth = 0
    while max_depth is None or depth < max_depth:
        checks = graph.expand(frontier, seen_vars)
        new_mask = np.zeros(n_checks, dtype=bool)
        new_mask[checks] = True
        new_mask &= ~reached
        new = np.flatnonzero(new_mask)
        if new.size == 0:
            break
        if n_reached + new.size == n_checks:
            return new_mask
        reached |= new_mask
        n_reached += int(new.size)
        frontier = new
        depth += 1
    return ~reached


def peg_construct(
    block_len: int,
    degree_distribution: Union[Dict[int, float], Iterable[Tuple[int, float]]],
    rng_seed: int,
    rate: float,
    max_depth: Optional[int] = -1,
) -> LdpcCode:
    """
    Build an LDPC code by progressive edge growth

    Args:
        block_len: Number of variable nodes (≥ 100)
        degree_distribution: Variable degrees (node perspective), fractions sum to 1
        rng_seed: Seed for tie-breaking
        rate: Design rate; the code gets round((1 − rate)·block_len) checks
        max_depth: BFS depth cap; None for full depth, -1 (default) to pick by size

    Returns:
        LdpcCode whose column weights realize the distribution exactly

    Raises:
        ConstructionError: If a degree exceeds the number of checks or the
            edges cannot cover every check
    """
    validate_count("block_len", block_len, minimum=MIN_BLOCK_LEN)
    validate_fraction("rate", rate, open_low=True, open_high=True)
    pairs = degree_distribution.items() if isinstance(degree_distribution, dict) else degree_distribution
    distribution = validate_distribution("degree distribution", pairs)

    n_checks = int(round((1.0 - rate) * block_len))
    degrees = degree_sequence(block_len, distribution)
    if n_checks < 1:
        raise ConstructionError(f"rate {rate} leaves no check nodes at block length {block_len}")
    if degrees.max() > n_checks:
        raise ConstructionError(f"variable degree {int(degrees.max())} exceeds the {n_checks} check nodes")
    if degrees.sum() < n_checks:
        raise ConstructionError(f"{int(degrees.sum())} edges cannot cover {n_checks} check nodes")
    if max_depth == -1:
        max_depth = None if block_len <= AUTO_DEPTH_LIMIT else AUTO_MAX_DEPTH

    rng = np.random.default_rng(rng_seed)
    # Composite key: degree first, then a random rank rotated per edge.
    tie_rank = rng.permutation(n_checks).astype(np.int64)
    offsets = rng.integers(0, n_checks, size=int(degrees.sum()))
    edge = 0
    graph = _PegGraph(block_len, n_checks, int(degrees.max()))

    for v in range(block_len):
        for k in range(int(degrees[v])):
            if k == 0:
                mask = np.ones(n_checks, dtype=bool)
            else:
                mask = _candidates(graph, v, max_depth)
                mask[graph.checks_of(v)] = False
                if not mask.any():
                    mask = np.ones(n_checks, dtype=bool)
                    mask[graph.checks_of(v)] = False
            rank = (tie_rank + offsets[edge]) % n_checks
            edge += 1
            key = np.where(mask, graph.check_degree * n_checks + rank, np.iinfo(np.int64).max)
            graph.add_edge(v, int(np.argmin(key)))

    rows = graph.var_checks.ravel()
    cols = np.repeat(np.arange(block_len, dtype=np.int64), graph.var_checks.shape[1])
    keep = rows >= 0
    H = sparse.csr_matrix(
        (np.ones(int(keep.sum()), dtype=np.uint8), (rows[keep], cols[keep])),
        shape=(n_checks, block_len),
    )
    if np.any(graph.check_degree == 0):
        raise ConstructionError("construction left check nodes without edges")

    code = LdpcCode(H, design_rate=rate, distribution=distribution, seed=rng_seed)
    logger.debug(
        "peg_code_built",
        block_len=block_len,
        checks=n_checks,
        edges=code.n_edges,
        max_depth=max_depth,
    )
    return code
