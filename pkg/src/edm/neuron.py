"""Single-agent membrane dynamics: exponential integrate-and-fire drift,
ionic current decomposition, slow gating, spike detection and reset."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import AgentState, EifParams
from .topology import Topology


@dataclass
class IonCurrents:
    """Decomposition of the input current (uA)."""

    i_neib: float = 0.0
    i_noise: float = 0.0
    i_syn: float = 0.0

    @property
    def total(self) -> float:
        return self.i_neib + self.i_noise + self.i_syn


def frozen_exp_current(p: EifParams) -> float:
    """Spike-initiation term held constant during the refractory period.

    The exponential is evaluated at the reset potential, where the membrane
    is clamped, and treated as just another linear term until the
    refractory window ends.
    """
    return p.exp_conductance * p.delta_t * math.exp(
        (p.v_reset - p.v_threshold) / p.delta_t
    )


def eif_drift(v: float, p: EifParams, i_ion: float, in_refractory: bool = False) -> float:
    """Membrane drift dV/dt (mV/ms).

    C dV/dt = -rho_L (V - V_L) + rho_T Delta_T exp((V - V_T)/Delta_T) + I_ion.
    While refractory the exponential term is replaced by its frozen value at
    the reset potential.
    """
    assert v <= p.v_peak, "caller must not integrate past the spike cutoff"
    if in_refractory:
        exp_term = frozen_exp_current(p)
    else:
        exp_term = p.exp_conductance * p.delta_t * math.exp(
            (v - p.v_threshold) / p.delta_t
        )
    return (-p.leak_conductance * (v - p.v_leak) + exp_term + i_ion) / p.capacitance


def ionic_current(
    agent: AgentState,
    neighbor_potentials,
    noise_term: float,
    p: EifParams,
) -> IonCurrents:
    """Split the agent's input current into neighbor, noise, and gated parts.

    The gated current uses the driving force (V_syn - V) so a reversal
    potential above the membrane depolarizes; the neighbor current pulls
    toward the observed potentials with unit weights.
    """
    y = np.asarray(neighbor_potentials, dtype=float)
    i_neib = p.neib_conductance * float(np.sum(y - agent.v))
    i_syn = p.syn_conductance * agent.gamma * (p.v_syn - agent.v)
    return IonCurrents(i_neib=i_neib, i_noise=noise_term, i_syn=i_syn)


def gating_equilibrium(v: float, v_gamma: float, delta_gamma: float) -> float:
    """Equilibrium of the voltage-activated gate: a sigmoid in (0, 1)."""
    z = (v - v_gamma) / delta_gamma
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


def gating_step(gamma: float, v: float, p: EifParams, dt: float) -> float:
    """Relax the gate toward its equilibrium by exponential Euler.

    Exact for the linear relaxation tau_Gamma dGamma/dt = Gamma_inf - Gamma,
    so the result stays in [0, 1] for any dt.
    """
    g_inf = gating_equilibrium(v, p.v_gamma, p.delta_gamma)
    return g_inf + (gamma - g_inf) * math.exp(-dt / p.tau_gamma)


def detect_spike_and_reset(
    agent: AgentState, p: EifParams, dt: float
) -> tuple[AgentState, bool]:
    """Apply spike/reset/refractory bookkeeping after an integration step.

    A non-refractory agent at or above the cutoff spikes: its potential is
    set to the reset value and the refractory clock starts.  Refractory
    agents never spike; their potential is clamped at the reset value, the
    clock is decremented, and the binary state tracks the clock.
    """
    if agent.refractory_remaining > 0.0:
        agent.v = p.v_reset
        agent.refractory_remaining = max(0.0, agent.refractory_remaining - dt)
        agent.s = 1 if agent.refractory_remaining > 0.0 else 0
        return agent, False
    if agent.v >= p.v_peak:
        agent.v = p.v_reset
        agent.refractory_remaining = p.tau_ref
        agent.s = 1
        return agent, True
    agent.s = 0
    return agent, False


def firing_probability(
    i: int,
    potentials,
    topology: Topology,
    gain: float,
    drift: float,
    v_threshold: float,
    k_max: int,
) -> float:
    """Conditional probability that agent i is in state 1.

    Ratio of the agent's potential plus drift plus outbound coupling to the
    threshold plus the degree-normalized inbound coupling, clamped to [0, 1].
    A non-positive denominator maps to 1 for a positive numerator and to 0
    otherwise.
    """
    x = np.asarray(potentials, dtype=float)
    out = topology.neighbors_out(i)
    inb = topology.neighbors_in(i)
    numer = x[i] + drift + gain * float(np.sum(x[out] - x[i]))
    denom = v_threshold + gain * float(np.sum(x[i] - x[inb])) / k_max
    if denom <= 0.0:
        return 1.0 if numer > 0.0 else 0.0
    return float(min(1.0, max(0.0, numer / denom)))
