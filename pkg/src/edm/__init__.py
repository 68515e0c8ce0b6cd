"""Drift-diffusion decision networks on exponential integrate-and-fire
agents, with adaptive rewiring and self-organized-criticality diagnostics."""

from .analysis import (
    Avalanche,
    BranchingSummary,
    PowerLawFit,
    boltzmann_fit_check,
    branching_summary,
    detect_avalanches,
    fit_power_law,
)
from .config import (
    AgentState,
    ConfigError,
    EifParams,
    SimConfig,
    load_config,
    save_config,
    validate_config,
)
from .meanfield import (
    FieldSummary,
    absorbing_state_distribution,
    activity_density_estimate,
    boltzmann_distribution,
    boltzmann_unit_on_probability,
    field_summary,
    global_field,
    local_field,
    mean_activity,
    mean_field_distribution,
    mean_field_firing_prob,
)
from .network import (
    RewireEvent,
    coupling_affinity,
    coupling_probability,
    decoupling_probability,
    global_branching_ratio,
    local_branching_ratio,
    rewire_agent,
)
from .neuron import (
    IonCurrents,
    detect_spike_and_reset,
    eif_drift,
    firing_probability,
    gating_equilibrium,
    gating_step,
    ionic_current,
)
from .sde import (
    CorrelatedNoise,
    NoiseBlock,
    OuSpec,
    correlated_increments,
    em_step,
    ou_exact_mean,
    ou_exact_paths,
    ou_fundamental_solution,
    ou_transition_moments,
)
from .simulation import (
    DecisionOutcome,
    RunArtifacts,
    SimulationError,
    World,
    classify_decision,
    run_simulation,
    running_mean_state,
    step,
)
from .topology import Topology, init_topology, laplacian

__version__ = "0.1.0"
