"""Semiclassical wavepacket toolkit for two-arm decoherence studies."""

from ._kernels import backend_name
from .bath import (
    BathEnsemble,
    diagonal_mixture,
    pure_state,
    single_packet,
    thermal_harmonic,
    validate,
)
from .coherence import (
    CoherenceReport,
    EffectiveWavefunction,
    EvolvedBranch,
    TwoArmScenario,
    diagonal_mu,
    effective_wavefunction,
    evolve,
    ipr_bound,
    m_coh,
    nondynamical_estimate,
    phase_distribution,
    pure_bath_mu,
    total_purity,
)
from .errors import (
    ConfigError,
    ConsistencyError,
    ContractError,
    DomainError,
    GwpdecError,
    ModelError,
    PropagationError,
    ResolutionError,
)
from .perturbation import Deviation, PerturbedEvolution, apply, forced_deviation, perturbed_phase
from .potentials import JointHamiltonian, PotentialModel, builtin_model
from .propagator import (
    PropagationState,
    StabilityMatrix,
    Trajectory,
    assemble,
    default_dt,
    propagate,
    stability,
)
from .wavecore import GaussianWavepacket, displace, normalized, overlap, product_packet

__version__ = "0.1.0"

__all__ = [
    "BathEnsemble",
    "CoherenceReport",
    "ConfigError",
    "ConsistencyError",
    "ContractError",
    "Deviation",
    "DomainError",
    "EffectiveWavefunction",
    "EvolvedBranch",
    "GaussianWavepacket",
    "GwpdecError",
    "JointHamiltonian",
    "ModelError",
    "PerturbedEvolution",
    "PotentialModel",
    "PropagationError",
    "PropagationState",
    "ResolutionError",
    "StabilityMatrix",
    "Trajectory",
    "TwoArmScenario",
    "apply",
    "assemble",
    "backend_name",
    "builtin_model",
    "default_dt",
    "diagonal_mixture",
    "diagonal_mu",
    "displace",
    "effective_wavefunction",
    "evolve",
    "forced_deviation",
    "ipr_bound",
    "m_coh",
    "nondynamical_estimate",
    "normalized",
    "overlap",
    "perturbed_phase",
    "phase_distribution",
    "product_packet",
    "propagate",
    "pure_bath_mu",
    "pure_state",
    "single_packet",
    "stability",
    "thermal_harmonic",
    "total_purity",
    "validate",
]
