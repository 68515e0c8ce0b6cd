"""Directed simple-graph topology with an out-degree cap."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Topology:
    """Adjacency-matrix wrapper for the agent graph.

    ``adjacency[i, j] > 0`` means a directed link i -> j with weight
    ``adjacency[i, j]`` (always 1 here; there are no self loops and no
    multiple edges in the same direction).
    """

    adjacency: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def out_degree(self) -> np.ndarray:
        return np.count_nonzero(self.adjacency, axis=1)

    def neighbors_out(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[i])

    def neighbors_in(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[:, i])

    def has_link(self, i: int, j: int) -> bool:
        return self.adjacency[i, j] != 0

    def add_link(self, i: int, j: int) -> None:
        if i == j:
            raise ValueError("self loops are not allowed")
        self.adjacency[i, j] = 1.0

    def remove_link(self, i: int, j: int) -> None:
        self.adjacency[i, j] = 0.0

    def copy(self) -> "Topology":
        return Topology(self.adjacency.copy())

    def validate(self, k_max: int | None = None) -> None:
        a = self.adjacency
        if a.shape[0] != a.shape[1]:
            raise ValueError("adjacency must be square")
        if np.any(a < 0):
            raise ValueError("adjacency weights must be nonnegative")
        if np.any(np.diag(a) != 0):
            raise ValueError("adjacency diagonal must be zero (simple graph)")
        if k_max is not None and np.any(self.out_degree > k_max):
            raise ValueError(f"out-degree exceeds cap {k_max}")


def init_topology(n: int, k: int, seed: int) -> Topology:
    """Wire each of ``n`` nodes to ``k`` distinct random targets.

    Every node receives exactly ``k`` outward links (weight 1) to targets
    drawn uniformly without replacement from the other nodes.
    """
    if not 0 <= k <= n - 1:
        raise ValueError(f"k must be in [0, {n - 1}]")
    rng = np.random.default_rng(seed)
    adj = np.zeros((n, n))
    others = np.arange(n)
    for i in range(n):
        pool = others[others != i]
        targets = rng.choice(pool, size=k, replace=False)
        adj[i, targets] = 1.0
    return Topology(adj)


def random_topology(n: int, k_max: int, rng: np.random.Generator) -> Topology:
    """Wire each node to a uniform-random number of targets in [1, k_max]."""
    adj = np.zeros((n, n))
    others = np.arange(n)
    for i in range(n):
        k_i = int(rng.integers(1, k_max + 1))
        pool = others[others != i]
        targets = rng.choice(pool, size=k_i, replace=False)
        adj[i, targets] = 1.0
    return Topology(adj)


def laplacian(t: Topology) -> np.ndarray:
    """Graph Laplacian L = D - A with D the out-degree diagonal.

    Every row sums to zero by construction.
    """
    a = t.adjacency
    return np.diag(a.sum(axis=1)) - a
