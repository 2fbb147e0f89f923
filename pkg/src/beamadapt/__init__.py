"""Uplink beamsteering optimization and cellular system simulation."""

from .adapt import (
    AdaptResult,
    ClientState,
    IterationTrace,
    beamadapt_solve,
    beamadapt_step,
    foschini_miljanic_solve,
    single_link_opt,
)
from .errors import InfeasibleError, NonConvergedError, ScenarioError
from .oracle import (
    FeasibilityReport,
    check_feasibility,
    max_feasible_links,
    solve_exact,
    solve_power_for_sizes,
)
from .radio import (
    BeamPattern,
    NetworkSnapshot,
    RadioParams,
    Solution,
    beam_gain,
    capacity,
    client_power,
    gain_matrix,
    noise_power,
    path_gain,
    sinr_for_capacity,
    sinr_from_gains,
    sinr_vector,
    transmitter_power,
)

__version__ = "0.1.0"
