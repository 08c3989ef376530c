"""Informative-layer graph: open-boundary square lattice with small-world rewiring."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError

# attempts at finding a valid new endpoint before an edge is left in place
_MAX_REWIRE_TRIES = 100


@dataclass(frozen=True)
class AdjacencyList:
    """Undirected simple graph stored as sorted neighbor tuples.

    ``indptr``/``indices`` hold the same graph in CSR form for the hot loop
    in :mod:`multiplex_market.herding`.
    """

    neighbors: tuple[tuple[int, ...], ...]
    indptr: np.ndarray = field(init=False, repr=False, compare=False)
    indices: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        degree = np.fromiter((len(nb) for nb in self.neighbors), dtype=np.int64,
                             count=len(self.neighbors))
        indptr = np.zeros(len(self.neighbors) + 1, dtype=np.int64)
        np.cumsum(degree, out=indptr[1:])
        indices = np.fromiter((j for nb in self.neighbors for j in nb), dtype=np.int64,
                              count=int(indptr[-1]))
        indptr.flags.writeable = False
        indices.flags.writeable = False
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", indices)

    @property
    def n_nodes(self) -> int:
        return len(self.neighbors)

    @property
    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def n_edges(self) -> int:
        return int(self.indptr[-1]) // 2

    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i, nb in enumerate(self.neighbors) for j in nb if i < j]

    def write_csv(self, path: str | Path) -> None:
        """Debug dump of the edge list, one ``i,j`` row per edge with i < j."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["i", "j"])
            writer.writerows(self.edges())


def lattice_edges(side: int) -> list[tuple[int, int]]:
    """Edges of the open-boundary 4-neighbor lattice, row-major node numbering."""
    edges = []
    for r in range(side):
        for c in range(side):
            i = r * side + c
            if c + 1 < side:
                edges.append((i, i + 1))
            if r + 1 < side:
                edges.append((i, i + side))
    return edges


def build_small_world(side: int, rewiring_prob: float, rng: np.random.Generator) -> AdjacencyList:
    """Build the informative layer over ``side**2`` agents.

    Each lattice edge ``(u, v)`` is visited once in construction order and,
    with probability ``rewiring_prob``, its ``v`` end is moved to a uniformly
    drawn node that is neither ``u`` nor already adjacent to ``u``. Moves that
    would leave ``v`` without neighbors are rejected, so the edge count and the
    minimum degree of one are preserved.
    """
    if side < 2:
        raise ConfigError(f"side must be >= 2, got {side}", ["side"])
    if not 0.0 <= rewiring_prob <= 1.0:
        raise ConfigError(f"rewiring_prob must lie in [0, 1], got {rewiring_prob}",
                          ["rewiring_prob"])
    n = side * side
    adj: list[set[int]] = [set() for _ in range(n)]
    edges = lattice_edges(side)
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)

    if rewiring_prob > 0.0:
        for u, v in edges:
            if rng.random() >= rewiring_prob:
                continue
            if v not in adj[u] or len(adj[v]) <= 1:
                # already moved away by an earlier rewiring, or would isolate v
                continue
            if len(adj[u]) >= n - 1:
                continue
            for _ in range(_MAX_REWIRE_TRIES):
                w = int(rng.integers(n))
                if w != u and w not in adj[u]:
                    break
            else:
                continue
            adj[u].discard(v)
            adj[v].discard(u)
            adj[u].add(w)
            adj[w].add(u)

    return AdjacencyList(tuple(tuple(sorted(nb)) for nb in adj))
