"""Time integration of the regularized system"""
from .params import SchemeParams, SchemeState, StepReport
from .stepping import (
    check_cfl,
    continuity_step,
    damping_step,
    heat_dissipation,
    momentum_step,
    picard_coupled_step,
    transport_step,
)
from .initial import build_initial_state, grid_from_config
from .runner import Monitor, Trajectory, run

__all__ = [
    "SchemeParams",
    "SchemeState",
    "StepReport",
    "check_cfl",
    "continuity_step",
    "damping_step",
    "heat_dissipation",
    "momentum_step",
    "picard_coupled_step",
    "transport_step",
    "build_initial_state",
    "grid_from_config",
    "Monitor",
    "Trajectory",
    "run",
]
