"""Adaptive rewiring driven by voltage differences, and the local/global
branching ratios used as the criticality diagnostic."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .topology import Topology


@dataclass
class RewireEvent:
    """One accepted rewiring: ``removed`` is -1 when a link was added
    without a drop (agent below its out-degree cap), and ``q_value`` is -1
    in that case."""

    time: float
    source: int
    added: int
    removed: int
    p_value: float
    q_value: float


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


def coupling_affinity(i: int, j: int, potentials, thresholds) -> float:
    """Voltage-difference part of the coupling probability, clamped to [0, 1].

    This is the acceptance probability of an attempted new link i -> j; the
    out-degree cap is enforced separately by the swap logic in
    ``rewire_agent``.
    """
    x = potentials
    vt = thresholds
    return _clamp01((x[j] - x[i]) / (vt[i] + vt[j]))


def coupling_probability(
    i: int, j: int, potentials, thresholds, topology: Topology, k_max: int
) -> float:
    """Probability that agent i couples to agent j.

    Product of the voltage-difference ratio and the free-slot fraction
    (K - K_i)/K, clamped to [0, 1].  Zero whenever agent i has no free
    outward slot.
    """
    x = potentials
    vt = thresholds
    k_i = int(topology.out_degree[i])
    raw = (x[j] - x[i]) / (vt[i] + vt[j]) * (k_max - k_i) / k_max
    return _clamp01(raw)


def decoupling_probability(
    i: int, j: int, potentials, thresholds, topology: Topology, k_max: int
) -> float:
    """Probability that agent i drops its existing link to neighbor j.

    Zero when agent i has nothing to decouple; asking about a non-neighbor
    is an error otherwise.
    """
    k_i = int(topology.out_degree[i])
    if k_i == 0:
        return 0.0
    if not topology.has_link(i, j):
        raise ValueError(f"agent {j} is not an out-neighbor of agent {i}")
    x = potentials
    vt = thresholds
    raw = (1.0 - (x[i] - x[j]) / (vt[i] + vt[j])) * k_i / k_max
    return _clamp01(raw)


def rewire_agent(
    i: int,
    topology: Topology,
    potentials,
    thresholds,
    k_max: int,
    rng: np.random.Generator,
    time: float = 0.0,
) -> list[RewireEvent]:
    """One rewiring pass for a firing agent; mutates ``topology``.

    Non-neighbors are visited in uniform random order.  Each is accepted
    with its coupling affinity; on acceptance one current neighbor is
    drawn for removal (first Bernoulli success over a random permutation
    of neighbors, each at its decoupling probability).  A successful draw
    swaps the links, keeping the out-degree fixed; if no drop succeeds the
    addition proceeds only while the agent is below the cap, otherwise it
    is aborted.  The graph stays simple throughout.
    """
    events: list[RewireEvent] = []
    candidates = [
        j for j in range(topology.n) if j != i and not topology.has_link(i, j)
    ]
    for j in rng.permutation(len(candidates)):
        target = candidates[j]
        if topology.has_link(i, target):
            continue
        p = coupling_affinity(i, target, potentials, thresholds)
        if rng.random() >= p:
            continue
        dropped = -1
        q_used = -1.0
        neighbors = topology.neighbors_out(i)
        for idx in rng.permutation(len(neighbors)):
            cand = int(neighbors[idx])
            q = decoupling_probability(
                i, cand, potentials, thresholds, topology, k_max
            )
            if rng.random() < q:
                dropped = cand
                q_used = q
                break
        if dropped >= 0:
            topology.remove_link(i, dropped)
            topology.add_link(i, target)
            events.append(RewireEvent(time, i, target, dropped, p, q_used))
        elif topology.out_degree[i] < k_max:
            topology.add_link(i, target)
            events.append(RewireEvent(time, i, target, -1, p, -1.0))
        # at the cap with no drop: addition aborted
    return events


def coupling_matrix(potentials, thresholds, topology: Topology, k_max: int) -> np.ndarray:
    """All pairwise coupling probabilities P[i, j], zero diagonal."""
    x = np.asarray(potentials, dtype=float)
    vt = np.asarray(thresholds, dtype=float)
    diff = x[None, :] - x[:, None]          # diff[i, j] = x_j - x_i
    vsum = vt[:, None] + vt[None, :]
    slots = (k_max - topology.out_degree.astype(float)) / k_max
    raw = diff / vsum * slots[:, None]
    np.fill_diagonal(raw, 0.0)
    return np.clip(raw, 0.0, 1.0)


def branching_ratios(
    potentials,
    thresholds,
    topology: Topology,
    k_max: int,
    cap: bool = True,
    mode: str = "neighbors",
) -> np.ndarray:
    """Local branching ratio of every agent.

    Each value sums the agent's coupling probabilities over its K target
    slots: ``mode="neighbors"`` uses the current out-neighbors, while
    ``mode="slots"`` takes the K largest probabilities over all non-self
    candidates as long as the agent has free slots, falling back to the
    current neighbors once saturated.  With ``cap`` every value is capped
    at 1 per evaluation.
    """
    if mode not in ("neighbors", "slots"):
        raise ValueError(f"unknown sigma mode {mode!r}")
    probs = coupling_matrix(potentials, thresholds, topology, k_max)
    deg = topology.out_degree
    sigma = np.empty(topology.n)
    for j in range(topology.n):
        if mode == "slots" and deg[j] < k_max:
            ranked = np.sort(probs[j])[::-1]
            sigma[j] = ranked[:k_max].sum()
        else:
            sigma[j] = probs[j, topology.neighbors_out(j)].sum()
    return np.minimum(sigma, 1.0) if cap else sigma


def local_branching_ratio(
    j: int,
    potentials,
    thresholds,
    topology: Topology,
    k_max: int,
    cap: bool = True,
    mode: str = "neighbors",
) -> float:
    """Branching ratio of a single agent; see ``branching_ratios``."""
    return float(
        branching_ratios(potentials, thresholds, topology, k_max, cap, mode)[j]
    )


def global_branching_ratio(
    potentials,
    thresholds,
    topology: Topology,
    k_max: int,
    cap: bool = True,
    mode: str = "neighbors",
) -> float:
    """Mean of the local branching ratios with the (N-1) normalizer.

    The value 1 marks criticality; below 1 is sub-critical, above 1
    super-critical.
    """
    sigma = branching_ratios(potentials, thresholds, topology, k_max, cap, mode)
    return float(sigma.sum() / (topology.n - 1))
