import math

import numpy as np
import pytest

from edm.config import AgentState, EifParams
from edm.neuron import (
    IonCurrents,
    detect_spike_and_reset,
    eif_drift,
    firing_probability,
    frozen_exp_current,
    gating_equilibrium,
    gating_step,
    ionic_current,
)
from edm.topology import Topology

P = EifParams()


def test_eif_drift_at_threshold():
    # (-0.1*10 + 0.1*1*e^0) / 1 = -0.9
    assert eif_drift(10.0, P, 0.0) == pytest.approx(-0.9)


def test_eif_drift_one_slope_above_threshold():
    expected = (-0.1 * 11.0 + 0.1 * math.e) / 1.0
    assert eif_drift(11.0, P, 0.0) == pytest.approx(expected)
    assert eif_drift(11.0, P, 0.0) == pytest.approx(-0.8282, abs=1e-4)


def test_eif_drift_leak_equilibrium_construction():
    v = P.v_leak
    cancel = -P.exp_conductance * P.delta_t * math.exp((v - P.v_threshold) / P.delta_t)
    assert eif_drift(v, P, cancel) == pytest.approx(0.0, abs=1e-15)


def test_eif_drift_refractory_freezes_exponential():
    i_ion = 0.3
    frozen = frozen_exp_current(P)
    expected = (-P.leak_conductance * (5.0 - P.v_leak) + frozen + i_ion) / P.capacitance
    assert eif_drift(5.0, P, i_ion, in_refractory=True) == pytest.approx(expected)
    # at the clamped reset potential the frozen and live terms coincide
    assert eif_drift(P.v_reset, P, 0.0, in_refractory=True) == pytest.approx(
        eif_drift(P.v_reset, P, 0.0, in_refractory=False)
    )


def test_ionic_current_closed_gate():
    a = AgentState(v=5.0, gamma=0.0)
    out = ionic_current(a, [], 0.0, P)
    assert out.i_syn == 0.0


def test_ionic_current_reversal_potential():
    a = AgentState(v=P.v_syn, gamma=0.7)
    assert ionic_current(a, [], 0.0, P).i_syn == 0.0


def test_ionic_current_two_neighbors():
    a = AgentState(v=10.0, gamma=0.0)
    out = ionic_current(a, [12.0, 12.0], 0.0, P)
    assert out.i_neib == pytest.approx(0.1 * (2.0 + 2.0))


def test_ionic_current_total_is_exact_sum():
    out = IonCurrents(i_neib=0.1, i_noise=-0.2, i_syn=0.3)
    assert out.total == 0.1 + -0.2 + 0.3


def test_gating_equilibrium_values():
    assert gating_equilibrium(P.v_gamma, P.v_gamma, P.delta_gamma) == 0.5
    assert gating_equilibrium(1e6, P.v_gamma, P.delta_gamma) == pytest.approx(1.0)
    assert gating_equilibrium(-1e6, P.v_gamma, P.delta_gamma) == pytest.approx(0.0)
    assert gating_equilibrium(
        P.v_gamma + P.delta_gamma, P.v_gamma, P.delta_gamma
    ) == pytest.approx(1.0 / (1.0 + math.exp(-1.0)))


def test_gating_equilibrium_monotone():
    rng = np.random.default_rng(0)
    v = np.sort(rng.uniform(-50, 50, 1000))
    vals = [gating_equilibrium(x, P.v_gamma, P.delta_gamma) for x in v]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_gating_step_fixed_point():
    g_inf = gating_equilibrium(7.0, P.v_gamma, P.delta_gamma)
    assert gating_step(g_inf, 7.0, P, 0.5) == pytest.approx(g_inf)


def test_gating_step_relaxation():
    # from 0 toward an equilibrium of ~1 over one time constant
    v_high = P.v_gamma + 50 * P.delta_gamma
    out = gating_step(0.0, v_high, P, P.tau_gamma)
    assert out == pytest.approx(1.0 - math.exp(-1.0), abs=1e-6)
    assert gating_step(0.2, v_high, P, 1e6) == pytest.approx(1.0)


def test_gating_stays_in_unit_interval():
    rng = np.random.default_rng(1)
    gamma = rng.random(1_000_000)
    v = rng.uniform(-100, 100, 1_000_000)
    dt = rng.uniform(1e-4, 10, 1_000_000)
    z = (v - P.v_gamma) / P.delta_gamma
    g_inf = np.where(z >= 0, 1 / (1 + np.exp(-np.abs(z))), np.exp(-np.abs(z)) / (1 + np.exp(-np.abs(z))))
    out = g_inf + (gamma - g_inf) * np.exp(-dt / P.tau_gamma)
    assert np.all((out >= 0) & (out <= 1))
    # scalar path agrees with the vectorized expression
    for i in range(0, 1_000_000, 100_000):
        assert gating_step(gamma[i], v[i], P, dt[i]) == pytest.approx(out[i], abs=1e-12)


def test_detect_spike_resets_and_starts_refractory():
    a = AgentState(v=P.v_peak, s=0)
    a, spiked = detect_spike_and_reset(a, P, 0.01)
    assert spiked
    assert a.v == P.v_reset
    assert a.refractory_remaining == P.tau_ref
    assert a.s == 1


def test_detect_below_cutoff_no_spike():
    a = AgentState(v=P.v_peak - 1e-9, s=0)
    a, spiked = detect_spike_and_reset(a, P, 0.01)
    assert not spiked
    assert a.v == P.v_peak - 1e-9
    assert a.s == 0


def test_refractory_agent_never_spikes():
    # even when noise forces the potential above the cutoff
    a = AgentState(v=P.v_peak + 3.0, s=1, refractory_remaining=1.0)
    a, spiked = detect_spike_and_reset(a, P, 0.01)
    assert not spiked
    assert a.v == P.v_reset
    assert a.s == 1
    assert a.refractory_remaining == pytest.approx(0.99)


def test_refractory_clock_releases_state():
    a = AgentState(v=P.v_reset, s=1, refractory_remaining=0.01)
    a, spiked = detect_spike_and_reset(a, P, 0.01)
    assert not spiked
    assert a.refractory_remaining == 0.0
    assert a.s == 0


def _line_topology():
    # 0 -> 1, no inbound links to 0
    adj = np.zeros((2, 2))
    adj[0, 1] = 1.0
    return Topology(adj)


def test_firing_probability_zero_numerator():
    t = _line_topology()
    assert firing_probability(0, [0.0, 0.0], t, 1.0, 0.0, 10.0, 1) == 0.0


def test_firing_probability_ratio_one():
    t = _line_topology()
    assert firing_probability(0, [10.0, 10.0], t, 1.0, 0.0, 10.0, 1) == 1.0


def test_firing_probability_hand_example():
    # numerator 5 + 1 + 2, denominator 10 + 0 -> 0.8
    t = _line_topology()
    x = [5.0, 7.0]  # coupling term with gain 1: (7 - 5) = 2
    assert firing_probability(0, x, t, 1.0, 1.0, 10.0, 1) == pytest.approx(0.8)


def test_firing_probability_clamped_and_denominator_rule():
    t = _line_topology()
    # numerator far above denominator clamps to 1
    assert firing_probability(0, [100.0, 100.0], t, 1.0, 0.0, 10.0, 1) == 1.0
    # negative numerator clamps to 0
    assert firing_probability(0, [-5.0, -5.0], t, 1.0, 0.0, 10.0, 1) == 0.0
    # non-positive denominator: inbound coupling drags it below zero
    adj = np.zeros((2, 2))
    adj[1, 0] = 1.0  # 1 -> 0 inbound
    t_in = Topology(adj)
    # denominator 10 + (0 - 50)/1 = -40; positive numerator maps to 1
    assert firing_probability(0, [0.0, 50.0], t_in, 1.0, 5.0, 10.0, 1) == 1.0
    # same denominator with non-positive numerator maps to 0
    assert firing_probability(0, [0.0, 50.0], t_in, 1.0, -5.0, 10.0, 1) == 0.0


def test_firing_probability_always_in_unit_interval():
    rng = np.random.default_rng(2)
    adj = (rng.random((6, 6)) < 0.4).astype(float)
    np.fill_diagonal(adj, 0.0)
    t = Topology(adj)
    for _ in range(200):
        x = rng.uniform(-30, 30, 6)
        p = firing_probability(3, x, t, 0.5, rng.uniform(-2, 2), 10.0, 5)
        assert 0.0 <= p <= 1.0
