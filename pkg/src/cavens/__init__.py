"""Moment dynamics and nonclassicality witnesses for a driven cavity
coupled to two atomic ensembles, with an independent truncated-Fock
master-equation oracle."""

from .model import (
    Configuration,
    Moment,
    MomentState,
    Scenario,
    SystemParams,
    initial_state,
    preset_params,
    validate_params,
)
from .dynamics import (
    IntegrationError,
    NoSteadyStateError,
    Trajectory,
    integrate,
    rhs,
    steady_state_first_moments,
)
from .closure import (
    OperatorFactor,
    annihilator,
    creator,
    decouple3,
    decouple4,
    number_triple_product,
    pair_moment,
)
from .witnesses import InternalConsistencyError, WitnessRecord, evaluate
from .oracle import (
    DensityMatrix,
    FockBasisSpec,
    Liouvillian,
    build_generator,
    closure_report,
    evolve,
    expectation,
    moments_from_density,
)
from .runner import SignMatrix, SweepSurface, WitnessSeries, chi_sweep, run_scenario, table_matrix
from .io_cli import ConfigError, emit_csv, parse_config

__version__ = "0.1.0"
