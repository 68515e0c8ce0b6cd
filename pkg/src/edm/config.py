"""Configuration and per-agent state types shared by every module."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields


class ConfigError(ValueError):
    """Raised when a configuration violates an invariant."""


@dataclass
class EifParams:
    """Membrane parameters of the exponential integrate-and-fire agent.

    Units: conductances mS, capacitance uF, potentials mV, times ms.
    """

    capacitance: float = 1.0        # C
    leak_conductance: float = 0.1   # rho_L
    exp_conductance: float = 0.1    # rho_T, scales the spike-initiation term
    syn_conductance: float = 0.1    # rho_syn, gated slow current
    neib_conductance: float = 0.1   # rho_neib, neighbor-coupling current
    v_leak: float = 0.0
    v_threshold: float = 10.0       # V_T, soft threshold of the exponential term
    v_reset: float = 0.0            # V_R
    v_syn: float = 20.0             # reversal potential of the gated current
    delta_t: float = 1.0            # slope factor of spike initiation
    v_peak: float = 15.0            # numerical spike cutoff, must exceed v_threshold
    tau_ref: float = 2.0            # absolute refractory period
    v_gamma: float = 10.0           # half-activation of the gating sigmoid
    delta_gamma: float = 2.0        # gating sigmoid width
    tau_gamma: float = 5.0          # gating relaxation time

    def validate(self) -> None:
        if self.capacitance <= 0:
            raise ConfigError("eif.capacitance must be > 0")
        if self.delta_t <= 0:
            raise ConfigError("eif.delta_t must be > 0")
        if self.delta_gamma <= 0:
            raise ConfigError("eif.delta_gamma must be > 0")
        if self.tau_ref <= 0:
            raise ConfigError("eif.tau_ref must be > 0")
        if self.tau_gamma <= 0:
            raise ConfigError("eif.tau_gamma must be > 0")
        if self.v_peak <= self.v_threshold:
            raise ConfigError("eif.v_peak must be > eif.v_threshold")
        if self.v_reset > self.v_threshold:
            raise ConfigError("eif.v_reset must be <= eif.v_threshold")


@dataclass
class SimConfig:
    """Full parameterization of one simulation run.

    ``drift_bias`` is the signed evidence drift (mV/ms); its sign encodes
    which of the two choices an agent's evidence supports.  A scalar is
    broadcast to all agents, a list gives per-agent drifts.
    """

    n_agents: int = 10
    max_links: int = 3              # out-degree cap K
    dt: float = 0.01                # ms
    t_total: float = 100.0          # ms
    seed: int = 0
    eif: EifParams = field(default_factory=EifParams)
    noise_sigma: float = 2.0        # diffusion amplitude, mV/sqrt(ms)
    noise_correlation: float = 0.0  # pairwise correlation of the Wiener drives
    drift_bias: float | list[float] = 0.5
    gain: float = 0.02              # coupling gain alpha, 1/ms
    decision_threshold: float = 8.0  # z, applied as +/- z to the mean potential
    avalanche_bin: float = 0.2      # ms
    cap_sigma: bool = True          # cap each local branching ratio at 1
    kb: float = 1.0                 # Boltzmann constant
    sigma_mode: str = "neighbors"   # "neighbors" or "slots"
    snapshot_stride: int = 10       # steps between logged snapshots
    initial_links: int | None = None  # out-degree at t=0; None means max_links
    obs_noise_sigma: float = 0.0    # sd of observation noise on neighbor potentials

    @property
    def n_steps(self) -> int:
        """Number of integration steps, also the input-sequence length d."""
        return int(round(self.t_total / self.dt))

    def drift_vector(self):
        import numpy as np

        g = np.asarray(self.drift_bias, dtype=float)
        if g.ndim == 0:
            g = np.full(self.n_agents, float(g))
        if g.shape != (self.n_agents,):
            raise ConfigError(
                f"drift_bias must be scalar or length {self.n_agents}, got shape {g.shape}"
            )
        return g

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "SimConfig":
        raw = dict(raw)
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "eif" in raw and isinstance(raw["eif"], dict):
            eif_known = {f.name for f in fields(EifParams)}
            eif_unknown = set(raw["eif"]) - eif_known
            if eif_unknown:
                raise ConfigError(f"unknown eif keys: {sorted(eif_unknown)}")
            raw["eif"] = EifParams(**raw["eif"])
        return cls(**raw)


def validate_config(cfg: SimConfig) -> SimConfig:
    """Check every invariant of ``cfg`` and return it untouched.

    Raises ``ConfigError`` naming the violated field and bound.
    """
    n = cfg.n_agents
    if n < 2:
        raise ConfigError("n_agents must be >= 2")
    if cfg.max_links < 1:
        raise ConfigError("max_links must be >= 1")
    if cfg.max_links > n - 1:
        raise ConfigError("max_links must be <= N-1")
    if cfg.dt <= 0:
        raise ConfigError("dt must be > 0")
    if cfg.t_total < cfg.dt:
        raise ConfigError("t_total must be >= dt")
    # Positive semidefiniteness of the equicorrelated noise covariance.
    lower = max(-1.0 / (n - 1), -1.0)
    if not (lower < cfg.noise_correlation < 1.0):
        if cfg.noise_correlation <= lower:
            raise ConfigError(
                f"noise_correlation below PSD bound: must be > {lower:.6g} for N={n}"
            )
        raise ConfigError("noise_correlation must be < 1")
    if cfg.decision_threshold <= 0:
        raise ConfigError("decision_threshold must be > 0")
    if cfg.noise_sigma < 0:
        raise ConfigError("noise_sigma must be >= 0")
    if cfg.avalanche_bin <= 0:
        raise ConfigError("avalanche_bin must be > 0")
    if cfg.kb <= 0:
        raise ConfigError("kb must be > 0")
    if not math.isfinite(cfg.gain):
        raise ConfigError("gain must be finite")
    if cfg.sigma_mode not in ("neighbors", "slots"):
        raise ConfigError("sigma_mode must be 'neighbors' or 'slots'")
    if cfg.snapshot_stride < 1:
        raise ConfigError("snapshot_stride must be >= 1")
    if cfg.initial_links is not None:
        if not (0 <= cfg.initial_links <= cfg.max_links):
            raise ConfigError("initial_links must be in [0, max_links]")
    if cfg.obs_noise_sigma < 0:
        raise ConfigError("obs_noise_sigma must be >= 0")
    cfg.drift_vector()  # shape check
    cfg.eif.validate()
    return cfg


def load_config(path: str) -> SimConfig:
    """Load and validate a JSON config file. Unknown keys are errors."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    return validate_config(SimConfig.from_dict(raw))


def save_config(cfg: SimConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass
class AgentState:
    """Mutable per-agent state advanced by the simulation loop.

    ``s`` is 1 exactly while the agent is inside its refractory window, which
    is how the binary decision state is defined.
    """

    v: float = 0.0                   # membrane potential, mV
    s: int = 0                       # binary state
    gamma: float = 0.0               # gating variable in [0, 1]
    refractory_remaining: float = 0.0  # ms
    per_agent_threshold: float = 10.0  # V_Ti, local rigidity
    drift: float = 0.0               # g_i, mV/ms
