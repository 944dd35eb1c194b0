"""Simulation and verification tools for a tilting-rotor quadrotor with five controllable DoF."""

from .allocation import allocate, d_matrix
from .controller import (
    ControllerConfig,
    ControllerState,
    GainSet,
    Reference,
    control_step,
    validate_gains,
)
from .errors import (
    ConfigError,
    DegenerateGf,
    GainRejection,
    GimbalLock,
    InfeasiblePitch,
    InvalidLog,
    NegativeThrust,
    SimulationAborted,
    TiltrotorError,
    TiltSingularity,
)
from .stability import certify_cascade, det_b, routh_hurwitz_cubic
from .vehicle import ActuatorCommand, RigidState, VehicleParams, VirtualWrench, mixer_matrix

__version__ = "0.1.0"

__all__ = [
    "ActuatorCommand", "ConfigError", "ControllerConfig", "ControllerState", "DegenerateGf",
    "GainRejection", "GainSet", "GimbalLock", "InfeasiblePitch", "InvalidLog", "NegativeThrust",
    "Reference", "RigidState", "SimulationAborted", "TiltSingularity", "TiltrotorError",
    "VehicleParams", "VirtualWrench", "allocate", "certify_cascade", "control_step", "d_matrix",
    "det_b", "mixer_matrix", "routh_hurwitz_cubic", "validate_gains",
]
