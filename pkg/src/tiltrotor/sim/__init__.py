"""Scenario engine: references, contact model, logging and the closed-loop driver."""

from .contact import CartModel, ContactState, PerchSite, perch_and_push_step, perch_pose
from .log import COLUMNS, SimulationLog
from .references import (
    Pose,
    pitch_profile_reference,
    quintic_blend,
    sequential_planner,
    square_xy_reference,
)
from .scenarios import (
    BUILTIN_SCENARIOS,
    PerchSettings,
    Scenario,
    builtin_scenario,
    rk4_step,
    run_scenario,
)

__all__ = [
    "BUILTIN_SCENARIOS", "COLUMNS", "CartModel", "ContactState", "PerchSettings", "PerchSite",
    "Pose", "Scenario", "SimulationLog", "builtin_scenario", "perch_and_push_step", "perch_pose",
    "pitch_profile_reference", "quintic_blend", "rk4_step", "run_scenario", "sequential_planner",
    "square_xy_reference",
]
