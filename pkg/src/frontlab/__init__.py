"""frontlab: a 1D reaction-diffusion front-propagation laboratory.

Builds traveling-wave profiles, evolves them through time-switched and
x-periodic media with comparison-preserving IMEX schemes, tracks the
interface, predicts the post-switch speed from the inherited tail
exponent, and certifies envelope/ordering/monotonicity/comparison
properties on the computed trajectories.
"""

from . import certify, interface, periodiclab, profile, reaction, solver, speedlaw
from .errors import FrontLabError
from .interface import (
    InterfaceTrack,
    SpeedEstimate,
    global_mean_speed,
    invasion_check,
    level_position,
    verify_transition_criteria,
)
from .profile import FrontProfile, decay_exponent, fit_tail, minimal_speed, solve_profile
from .reaction import (
    Nonlinearity,
    ReactionTerm,
    bistable,
    hump,
    kpp_power,
    logistic,
    tabulated,
    time_independent,
    time_switched,
)
from .solver import (
    FieldState,
    SolverConfig,
    Trajectory,
    evolve,
    evolve_periodic,
    init_from_profile,
    step,
)
from .speedlaw import (
    SwitchPrediction,
    SwitchReport,
    construct_example_pair,
    predict_c2,
    run_switch_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "FrontLabError",
    "Nonlinearity", "ReactionTerm", "logistic", "kpp_power", "bistable",
    "hump", "tabulated", "time_independent", "time_switched",
    "FrontProfile", "decay_exponent", "solve_profile", "minimal_speed",
    "fit_tail",
    "FieldState", "SolverConfig", "Trajectory", "init_from_profile", "step",
    "evolve", "evolve_periodic",
    "InterfaceTrack", "SpeedEstimate", "level_position", "global_mean_speed",
    "verify_transition_criteria", "invasion_check",
    "SwitchPrediction", "SwitchReport", "predict_c2", "run_switch_experiment",
    "construct_example_pair",
    "reaction", "profile", "solver", "interface", "speedlaw", "certify",
    "periodiclab",
]
