"""Reference generators: quintic square, pitch sweep and the sequential perch planner."""

import math
from dataclasses import dataclass
from typing import NamedTuple

from ..controller import Reference
from ..errors import InfeasiblePitch
from ..so3 import GIMBAL_MARGIN, wrap_angle

# peak speed of the minimum-jerk quintic is 15/8 of the mean speed
QUINTIC_PEAK_SPEED = 1.875


def quintic_blend(t, t0, duration):
    """Minimum-jerk blend ``s`` from 0 to 1 over ``[t0, t0 + duration]``.

    Returns ``(s, s_dot, s_ddot)``; velocity and acceleration vanish at both
    ends, so consecutive segments join with continuous acceleration.
    """
    if duration <= 0.0:
        return (1.0 if t >= t0 else 0.0), 0.0, 0.0
    tau = (t - t0) / duration
    if tau <= 0.0:
        return 0.0, 0.0, 0.0
    if tau >= 1.0:
        return 1.0, 0.0, 0.0
    t2, t3 = tau * tau, tau * tau * tau
    s = t3 * (10.0 - 15.0 * tau + 6.0 * t2)
    ds = 30.0 * t2 * (1.0 - 2.0 * tau + t2) / duration
    dds = 60.0 * tau * (1.0 - 3.0 * tau + 2.0 * t2) / duration ** 2
    return s, ds, dds


def quintic_peak_acceleration(distance, duration):
    """Largest ``|acceleration|`` of a quintic segment, attained at ``tau = 1/2 -+ sqrt(3)/6``."""
    return 10.0 * math.sqrt(3.0) / 3.0 * abs(distance) / duration ** 2


def square_xy_reference(t, side=1.0, period=20.0, altitude=1.0, origin=(0.0, 0.0)):
    """Square loop in the horizontal plane with zero pitch and yaw.

    Corners are visited counter-clockwise starting at ``origin``: +x, +y, -x,
    -y; each side takes a quarter period. The loop repeats every ``period``.
    """
    if t < 0.0:
        raise ValueError("t must be non-negative")
    leg_time = period / 4.0
    phase = math.fmod(t, period)
    leg = min(3, int(phase // leg_time))
    corners = ((0.0, 0.0), (side, 0.0), (side, side), (0.0, side), (0.0, 0.0))
    (x0, y0), (x1, y1) = corners[leg], corners[leg + 1]
    s, ds, dds = quintic_blend(phase, leg * leg_time, leg_time)
    dx, dy = x1 - x0, y1 - y0
    return Reference(
        p=(origin[0] + x0 + s * dx, origin[1] + y0 + s * dy, altitude),
        v=(ds * dx, ds * dy, 0.0),
        a=(dds * dx, dds * dy, 0.0),
    )


def pitch_profile_reference(t, amplitude=math.radians(60.0), period=16.0,
                            position=(0.0, 0.0, 1.0), yaw=0.0):
    """Sinusoidal pitch sweep ``amplitude * sin(2 pi t / period)`` with position held."""
    if not abs(amplitude) < 0.5 * math.pi:
        raise ValueError("pitch amplitude must be below pi/2")
    w = 2.0 * math.pi / period
    s, c = math.sin(w * t), math.cos(w * t)
    return Reference(
        p=tuple(float(x) for x in position),
        pitch=(amplitude * s, amplitude * w * c, -amplitude * w * w * s),
        yaw=(float(yaw), 0.0, 0.0),
    )


class Pose(NamedTuple):
    """Position plus the two commandable attitude angles."""

    p: tuple
    pitch: float = 0.0
    yaw: float = 0.0


class Phase(NamedTuple):
    axis: str  # one of "z", "y", "yaw", "pitch", "x"
    start: float
    end: float
    t0: float
    t1: float


PLANNER_ORDER = ("z", "y", "yaw", "pitch", "x")


@dataclass(frozen=True)
class SequentialPlan:
    """Single-axis-at-a-time trajectory between two poses (callable on time)."""

    start: Pose
    goal: Pose
    phases: tuple

    @property
    def duration(self):
        return self.phases[-1].t1

    def __call__(self, t):
        values = {"x": self.start.p[0], "y": self.start.p[1], "z": self.start.p[2],
                  "pitch": self.start.pitch, "yaw": self.start.yaw}
        rates = dict.fromkeys(values, 0.0)
        accels = dict.fromkeys(values, 0.0)
        for ph in self.phases:
            if t >= ph.t1:
                values[ph.axis] = ph.end
                continue
            if t > ph.t0:
                s, ds, dds = quintic_blend(t, ph.t0, ph.t1 - ph.t0)
                delta = ph.end - ph.start
                values[ph.axis] = ph.start + s * delta
                rates[ph.axis] = ds * delta
                accels[ph.axis] = dds * delta
            break
        return Reference(
            p=(values["x"], values["y"], values["z"]),
            v=(rates["x"], rates["y"], rates["z"]),
            a=(accels["x"], accels["y"], accels["z"]),
            pitch=(values["pitch"], rates["pitch"], accels["pitch"]),
            yaw=(values["yaw"], rates["yaw"], accels["yaw"]),
        )


def sequential_planner(start, goal, max_speed=0.5, max_rate=0.5, min_duration=2.0,
                       margin=GIMBAL_MARGIN):
    """Plan ``z -> y -> yaw -> pitch -> x``, one quintic segment per axis.

    Phases without displacement get zero duration. Other phases last long
    enough to keep the peak speed under ``max_speed`` (m/s) or ``max_rate``
    (rad/s), and at least ``min_duration``. Yaw takes the short way round.

    Raises
    ------
    InfeasiblePitch
        If either pose's pitch is within ``margin`` of +-pi/2.
    """
    for pose in (start, goal):
        if not abs(pose.pitch) < 0.5 * math.pi - margin:
            raise InfeasiblePitch(f"pitch {pose.pitch:.4f} rad is outside the controllable range")
    start = Pose(tuple(float(x) for x in start.p), float(start.pitch), float(start.yaw))
    goal = Pose(tuple(float(x) for x in goal.p), float(goal.pitch), float(goal.yaw))
    endpoints = {
        "z": (start.p[2], goal.p[2]),
        "y": (start.p[1], goal.p[1]),
        "yaw": (start.yaw, start.yaw + wrap_angle(goal.yaw - start.yaw)),
        "pitch": (start.pitch, goal.pitch),
        "x": (start.p[0], goal.p[0]),
    }
    phases = []
    t = 0.0
    for axis in PLANNER_ORDER:
        a, b = endpoints[axis]
        delta = abs(b - a)
        if delta == 0.0:
            duration = 0.0
        else:
            limit = max_rate if axis in ("yaw", "pitch") else max_speed
            duration = max(min_duration, QUINTIC_PEAK_SPEED * delta / limit)
        phases.append(Phase(axis, a, b, t, t + duration))
        t += duration
    return SequentialPlan(start, goal, tuple(phases))
