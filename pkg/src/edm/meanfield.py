"""Boltzmann-form probabilities, local/global fields, mean activity, and
the absorbing-state distribution over quiescent potentials."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .topology import Topology

_GAMMA_EPS = 1e-6


def boltzmann_unit_on_probability(delta_e: float, temperature: float) -> float:
    """Probability that a binary unit is on: 1/(1 + exp(-dE/T))."""
    if temperature <= 0:
        raise ValueError("temperature must be > 0")
    z = delta_e / temperature
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


def boltzmann_distribution(energies, kt: float) -> np.ndarray:
    """Normalized Boltzmann weights exp(-e/kT), computed with a max shift
    so large energies cannot overflow."""
    if kt <= 0:
        raise ValueError("kT must be > 0")
    e = np.asarray(energies, dtype=float)
    if e.size == 0:
        raise ValueError("energy list must be nonempty")
    logw = -e / kt
    logw = logw - np.max(logw)
    w = np.exp(logw)
    return w / w.sum()


def total_drift_weight(drifts) -> float:
    """Normalizer W: sum of drift magnitudes (kept positive for mixed signs)."""
    return float(np.sum(np.abs(np.asarray(drifts, dtype=float))))


def local_field(i: int, topology: Topology, drifts, w: float) -> float:
    """Field at agent i from inbound neighbors: -sum_j a_ji g_j / W."""
    if w == 0:
        raise ValueError("drift normalizer W must be nonzero")
    a_in = topology.adjacency[:, i]
    g = np.asarray(drifts, dtype=float)
    return float(-np.sum(a_in * g) / w)


def global_field(local_fields, k_max: int, n: int) -> float:
    """Network-wide field: sum_i (F_i / K) / N."""
    f = np.asarray(local_fields, dtype=float)
    return float(np.sum(f / k_max) / n)


@dataclass
class FieldSummary:
    """Local fields, their global average, and the per-agent inverse
    temperature used in the mean-field firing distribution."""

    local_fields: np.ndarray
    global_field: float
    total_drift: float
    thermodynamic_beta: np.ndarray


def field_summary(
    topology: Topology,
    drifts,
    k_max: int,
    kb: float = 1.0,
    verbatim_gamma: bool = False,
) -> FieldSummary:
    """Compute all field quantities for the current topology and drifts.

    By default the inverse temperature falls back to 1/(k_B |F_bar|) for
    agents whose local field is not positive, which keeps the Boltzmann
    ordering intact; ``verbatim_gamma`` uses 1/(k_B F_i) unconditionally.
    """
    n = topology.n
    w = total_drift_weight(drifts)
    f = np.array([local_field(i, topology, drifts, w) for i in range(n)])
    f_bar = global_field(f, k_max, n)
    if verbatim_gamma:
        with np.errstate(divide="ignore"):
            gamma = 1.0 / (kb * f)  # infinite where F_i = 0, by definition
    else:
        fallback = 1.0 / (kb * max(abs(f_bar), _GAMMA_EPS))
        gamma = np.where(f > 0, 1.0 / (kb * np.where(f > 0, f, 1.0)), fallback)
    return FieldSummary(f, f_bar, w, gamma)


def normalize_log_weights(exponents) -> np.ndarray:
    """Turn exponent arguments into a distribution exp(e)/sum(exp(e))."""
    e = np.asarray(exponents, dtype=float)
    if not np.all(np.isfinite(e)):
        bad = np.flatnonzero(~np.isfinite(e))
        raise ValueError(f"non-finite exponents at agents {bad.tolist()}: {e[bad]}")
    w = np.exp(e - np.max(e))
    total = w.sum()
    if total == 0:
        raise ValueError(f"all weights vanished; exponents were {e}")
    return w / total


def mean_field_distribution(
    fields: FieldSummary,
    coupling_probs: np.ndarray,
    decoupling_probs: np.ndarray,
    topology: Topology,
    bias_sums,
) -> np.ndarray:
    """Mean-field firing distribution over the N agents.

    Per agent the exponent argument is
    -gamma_i * (sum over non-neighbors of F_bar * P_ij
                - sum over neighbors of F_j * Q_ij + bias_sum_i),
    and the partition function normalizes the exponentials over all agents.
    """
    n = topology.n
    b = np.asarray(bias_sums, dtype=float)
    exponents = np.empty(n)
    for i in range(n):
        nbr = topology.neighbors_out(i)
        non = np.setdiff1d(np.arange(n), np.append(nbr, i), assume_unique=False)
        attach = fields.global_field * float(np.sum(coupling_probs[i, non]))
        detach = float(np.sum(fields.local_fields[nbr] * decoupling_probs[i, nbr]))
        exponents[i] = -fields.thermodynamic_beta[i] * (attach - detach + b[i])
    return normalize_log_weights(exponents)


def mean_field_firing_prob(
    i: int,
    fields: FieldSummary,
    coupling_probs: np.ndarray,
    decoupling_probs: np.ndarray,
    topology: Topology,
    bias_sums,
) -> float:
    """Probability mass of agent i under the mean-field distribution."""
    return float(
        mean_field_distribution(
            fields, coupling_probs, decoupling_probs, topology, bias_sums
        )[i]
    )


def mean_activity(states) -> float:
    """Fraction of agents with binary state 1."""
    s = np.asarray(states)
    return float(np.mean(s))


def activity_density_estimate(potentials, firing_probs, phi) -> tuple[float, float]:
    """Monte Carlo estimate of the activity density integral.

    Averages phi(X) * p(s=1|X) over logged states and returns the mean with
    its standard error.
    """
    x = np.asarray(potentials, dtype=float)
    p = np.asarray(firing_probs, dtype=float)
    if x.size == 0:
        raise ValueError("at least one trajectory sample is required")
    vals = np.asarray(phi(x), dtype=float) * p
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else 0.0
    return mean, se


def absorbing_state_distribution(potentials, f_bar: float, kb: float = 1.0) -> np.ndarray:
    """Boltzmann distribution over quiescent-agent potentials.

    Softmax of -X_i/(k_B F_bar); invariant under shifting all potentials by
    a constant.
    """
    x = np.asarray(potentials, dtype=float)
    if x.size == 0:
        raise ValueError("no quiescent agents")
    if f_bar == 0:
        raise ValueError("global field must be nonzero")
    logw = -x / (kb * f_bar)
    logw = logw - np.max(logw)
    w = np.exp(logw)
    return w / w.sum()


def global_energy(states, topology: Topology, biases) -> float:
    """Diagnostic Boltzmann-machine energy with couplings from the adjacency.

    E = -sum_{i<j} a_ij s_i s_j - sum_i b_i s_i.  Never optimized, only
    reported.
    """
    s = np.asarray(states, dtype=float)
    b = np.asarray(biases, dtype=float)
    a = topology.adjacency
    pair = float(np.sum(np.triu(a, k=1) * np.outer(s, s)))
    return -pair - float(np.sum(b * s))
