"""Full-network simulation loop: correlated-noise integration of every
agent's membrane equation, gating updates, spike/reset handling, adaptive
rewiring, and event logging."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .config import SimConfig, validate_config
from .network import RewireEvent, branching_ratios, rewire_agent
from .sde import CorrelatedNoise
from .topology import Topology, init_topology, laplacian


class SimulationError(RuntimeError):
    """Raised when the integration produces a non-finite state."""


@dataclass
class Snapshot:
    t: float
    mean_v: float
    mean_activity: float
    sigma_global: float
    min_deg: int
    max_deg: int


@dataclass
class RunArtifacts:
    """Everything a finished run leaves behind.

    Re-running with the echoed config and seed reproduces every log
    byte-for-byte.
    """

    config: SimConfig
    seed: int
    spikes: list[tuple[float, int]]
    rewires: list[RewireEvent]
    snapshots: list[Snapshot]
    final_topology: Topology
    summary: dict = field(default_factory=dict)
    quiescent_samples: np.ndarray = field(default_factory=lambda: np.empty(0))


class World:
    """Mutable simulation state owned by the single-threaded loop."""

    def __init__(self, cfg: SimConfig, seed: int | None = None):
        validate_config(cfg)
        self.cfg = cfg
        self.seed = cfg.seed if seed is None else seed
        self.rng = np.random.default_rng(self.seed)
        n = cfg.n_agents
        k_init = cfg.max_links if cfg.initial_links is None else cfg.initial_links
        self.topology = init_topology(n, k_init, self.seed)
        p = cfg.eif
        self.v = np.full(n, p.v_reset, dtype=float)
        self.s = np.zeros(n, dtype=int)
        self.gamma = np.asarray(_sigmoid((self.v - p.v_gamma) / p.delta_gamma))
        self.refractory = np.zeros(n, dtype=float)
        self.thresholds = np.full(n, p.v_threshold, dtype=float)
        self.drift = cfg.drift_vector()
        self.noise = CorrelatedNoise(n, cfg.noise_correlation, cfg.dt, self.rng)
        self.frozen_exp = p.exp_conductance * p.delta_t * np.exp(
            (p.v_reset - p.v_threshold) / p.delta_t
        )
        self.step_index = 0
        self.spikes: list[tuple[float, int]] = []
        self.rewires: list[RewireEvent] = []
        self.snapshots: list[Snapshot] = []
        self.quiescent: list[np.ndarray] = []

    @property
    def t(self) -> float:
        return self.step_index * self.cfg.dt


def _sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def membrane_drift(world: World) -> np.ndarray:
    """Per-agent drift dV/dt for the current state.

    Combines leak, the spike-initiation exponential (frozen at the reset
    value for refractory agents), the gated current, the neighbor coupling
    at gain alpha, and the evidence drift.
    """
    cfg = world.cfg
    p = cfg.eif
    v = world.v
    refr = world.refractory > 0.0
    with np.errstate(over="ignore"):  # divergence is caught by the step guard
        exp_term = np.where(
            refr,
            world.frozen_exp,
            p.exp_conductance * p.delta_t * np.exp((v - p.v_threshold) / p.delta_t),
        )
    i_syn = p.syn_conductance * world.gamma * (p.v_syn - v)
    y = v
    if cfg.obs_noise_sigma > 0.0:
        y = v + cfg.obs_noise_sigma * world.rng.standard_normal(v.size)
    a = world.topology.adjacency
    coupling = a @ y - a.sum(axis=1) * v
    i_neib = p.capacitance * cfg.gain * coupling
    leak = -p.leak_conductance * (v - p.v_leak)
    return (leak + exp_term + i_syn + i_neib) / p.capacitance + world.drift


def step(world: World) -> World:
    """Advance the world by one time step.

    Order within a step: draw noise, evaluate drifts, integrate all
    potentials, relax the gates, detect spikes and reset, rewire the agents
    that spiked, then log.
    """
    cfg = world.cfg
    p = cfg.eif
    dt = cfg.dt
    dw = world.noise.sample()
    drift = membrane_drift(world)
    refr = world.refractory > 0.0
    v_new = world.v + drift * dt + cfg.noise_sigma * dw
    v_new[refr] = p.v_reset
    if not np.all(np.isfinite(v_new)):
        bad = int(np.flatnonzero(~np.isfinite(v_new))[0])
        raise SimulationError(
            f"non-finite potential for agent {bad} at step {world.step_index}"
        )
    world.v = v_new
    g_inf = _sigmoid((world.v - p.v_gamma) / p.delta_gamma)
    world.gamma = g_inf + (world.gamma - g_inf) * np.exp(-dt / p.tau_gamma)

    world.step_index += 1
    t = world.step_index * dt
    spiked: list[int] = []
    for i in range(cfg.n_agents):
        if world.refractory[i] > 0.0:
            world.v[i] = p.v_reset
            world.refractory[i] = max(0.0, world.refractory[i] - dt)
            world.s[i] = 1 if world.refractory[i] > 0.0 else 0
        elif world.v[i] >= p.v_peak:
            world.v[i] = p.v_reset
            world.refractory[i] = p.tau_ref
            world.s[i] = 1
            spiked.append(i)
            world.spikes.append((t, i))
        else:
            world.s[i] = 0
    for i in spiked:
        world.rewires.extend(
            rewire_agent(
                i, world.topology, world.v, world.thresholds,
                cfg.max_links, world.rng, t,
            )
        )
    if world.step_index % cfg.snapshot_stride == 0 or world.step_index == cfg.n_steps:
        _log_snapshot(world, t)
    return world


def _log_snapshot(world: World, t: float) -> None:
    cfg = world.cfg
    sigma = branching_ratios(
        world.v, world.thresholds, world.topology, cfg.max_links,
        cap=cfg.cap_sigma, mode=cfg.sigma_mode,
    )
    deg = world.topology.out_degree
    world.snapshots.append(
        Snapshot(
            t=t,
            mean_v=float(world.v.mean()),
            mean_activity=float(world.s.mean()),
            sigma_global=float(sigma.sum() / (cfg.n_agents - 1)),
            min_deg=int(deg.min()),
            max_deg=int(deg.max()),
        )
    )
    quiet = world.v[world.s == 0]
    if quiet.size:
        world.quiescent.append(quiet.copy())


@dataclass
class DecisionOutcome:
    label: str            # "optimal", "sub-optimal", or "undecided"
    wrong_choice: bool
    t_cross: float | None


def classify_decision(times, mean_v, z: float, correct_sign: float) -> DecisionOutcome:
    """Classify a run's aggregate trajectory against the choice thresholds.

    Optimal when the population-mean potential reaches the correct-signed
    threshold first; sub-optimal when no threshold is reached but the
    terminal mean has the correct sign; undecided otherwise, with wrong
    threshold crossings flagged.
    """
    times = np.asarray(times, dtype=float)
    x = np.asarray(mean_v, dtype=float)
    sign = np.sign(correct_sign)
    hi = np.flatnonzero(x >= z)
    lo = np.flatnonzero(x <= -z)
    t_hi = times[hi[0]] if hi.size else np.inf
    t_lo = times[lo[0]] if lo.size else np.inf
    if np.isfinite(min(t_hi, t_lo)):
        crossed_sign = 1.0 if t_hi <= t_lo else -1.0
        t_cross = float(min(t_hi, t_lo))
        if sign != 0 and crossed_sign == sign:
            return DecisionOutcome("optimal", False, t_cross)
        return DecisionOutcome("undecided", True, t_cross)
    terminal = x[-1]
    if sign != 0 and np.sign(terminal) == sign and abs(terminal) < z:
        return DecisionOutcome("sub-optimal", False, None)
    return DecisionOutcome("undecided", False, None)


def running_mean_state(mean_v) -> np.ndarray:
    """Cumulative time-average of the population-mean potential.

    The final entry is the long-run mean estimate.
    """
    x = np.asarray(mean_v, dtype=float)
    if x.size < 2:
        raise ValueError("at least two snapshots are required")
    return np.cumsum(x) / np.arange(1, x.size + 1)


def run_simulation(cfg: SimConfig, seed: int | None = None) -> RunArtifacts:
    """Execute a full run and collect all artifacts and summary statistics."""
    world = World(cfg, seed=seed)
    for _ in range(cfg.n_steps):
        step(world)
    return _collect(world)


def _collect(world: World) -> RunArtifacts:
    cfg = world.cfg
    snaps = world.snapshots
    sigma_series = np.array([s.sigma_global for s in snaps])
    mean_v_series = np.array([s.mean_v for s in snaps])
    times = np.array([s.t for s in snaps])
    cut = int(0.2 * sigma_series.size)
    post = sigma_series[cut:] if sigma_series.size > cut else sigma_series
    g = world.drift
    decision = classify_decision(
        times, mean_v_series, cfg.decision_threshold, float(np.sign(g.mean()))
    )
    u_series = (
        running_mean_state(mean_v_series) if mean_v_series.size >= 2 else mean_v_series
    )
    quiescent = (
        np.concatenate(world.quiescent) if world.quiescent else np.empty(0)
    )
    summary = {
        "n_spikes": len(world.spikes),
        "n_rewires": len(world.rewires),
        "sigma_mean_post_transient": float(post.mean()) if post.size else None,
        "sigma_terminal": float(sigma_series[-1]) if sigma_series.size else None,
        "mean_activity": float(np.mean([s.mean_activity for s in snaps]))
        if snaps else None,
        "u_bar": float(u_series[-1]) if u_series.size else None,
        "decision": {
            "label": decision.label,
            "wrong_choice": decision.wrong_choice,
            "t_cross": decision.t_cross,
        },
        "degree_min": int(world.topology.out_degree.min()),
        "degree_max": int(world.topology.out_degree.max()),
    }
    return RunArtifacts(
        config=cfg,
        seed=world.seed,
        spikes=world.spikes,
        rewires=world.rewires,
        snapshots=snaps,
        final_topology=world.topology,
        summary=summary,
        quiescent_samples=quiescent,
    )


def laplacian_coupling_oracle(world: World) -> np.ndarray:
    """Matrix form of the neighbor coupling, used to cross-check the
    per-agent sum: gain * (-L @ v) with L the graph Laplacian."""
    return world.cfg.gain * (-laplacian(world.topology) @ world.v)


def write_spikes_csv(path, spikes) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t_ms,agent_id\n")
        for t, i in spikes:
            fh.write(f"{t!r},{i}\n")


def write_rewires_csv(path, rewires) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t_ms,source,added,removed,p,q\n")
        for e in rewires:
            fh.write(
                f"{e.time!r},{e.source},{e.added},{e.removed},{e.p_value!r},{e.q_value!r}\n"
            )


def write_snapshots_csv(path, snapshots) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t_ms,mean_v,mean_activity,sigma_global,min_deg,max_deg\n")
        for s in snapshots:
            fh.write(
                f"{s.t!r},{s.mean_v!r},{s.mean_activity!r},"
                f"{s.sigma_global!r},{s.min_deg},{s.max_deg}\n"
            )


def write_run_json(path, artifacts: RunArtifacts, extra: dict | None = None) -> None:
    doc = {
        "config": artifacts.config.to_dict(),
        "seed": artifacts.seed,
        "summary": artifacts.summary,
    }
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
