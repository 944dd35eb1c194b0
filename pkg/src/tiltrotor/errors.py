"""Exception types shared across the package."""


class TiltrotorError(Exception):
    """Base class for all errors raised by this package."""


class GimbalLock(TiltrotorError):
    """Pitch is too close to +-pi/2 for the ZYX Euler-rate Jacobian to be inverted."""


class TiltSingularity(TiltrotorError):
    """Requested tilt angle is at (or too close to) +-pi/2, where the allocation is undefined."""


class NegativeThrust(TiltrotorError):
    """The requested wrench needs a negative rotor thrust."""

    def __init__(self, message, thrusts=None):
        super().__init__(message)
        self.thrusts = thrusts


class DegenerateGf(TiltrotorError):
    """The fully actuated input matrix is numerically singular."""


class GainRejection(TiltrotorError):
    """Controller gains violate the positivity or product conditions."""

    def __init__(self, violations):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


class InfeasiblePitch(TiltrotorError):
    """Perch pitch lies outside the controllable Euler range."""


class InvalidLog(TiltrotorError):
    """A simulation log cannot support the requested analysis."""


class SimulationAborted(TiltrotorError):
    """The simulation hit a NaN or left the admissible Euler range.

    The partial log up to the failure is attached as ``log``.
    """

    def __init__(self, message, log=None, time=None):
        super().__init__(message)
        self.log = log
        self.time = time


class ConfigError(TiltrotorError):
    """Run configuration failed to parse or validate."""
