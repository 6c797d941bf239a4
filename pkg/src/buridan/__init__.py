"""Simulation and parameter estimation for stochastically switching attractor dynamics."""

__version__ = "0.1.0"

from .errors import (
    BuridanError,
    ConfigError,
    DegenerateChainError,
    DegenerateError,
    DomainError,
    InfeasibleMomentsError,
    InvalidParametersError,
    NonConvergenceError,
    UnsupportedSizeError,
)
from .markov_core import (
    TauMatrix,
    build_transition_matrix,
    count_stationary_monomials,
    stationary_minor_determinant,
    stationary_power_iteration,
)
from .hybrid_sim import (
    ObservationSeries,
    PoissonParams,
    PolygonTargets,
    Trajectory,
    add_noise,
    simulate_line,
    simulate_poisson,
    simulate_polygon,
)
from .estimators import (
    EstimationReport,
    StateSequence,
    couplet_estimate,
    detect_states_line,
    detect_states_polygon,
    estimate_poisson_params,
    estimate_taus_from_states,
    mle_estimate,
)
