"""Idealised perching latch and a friction-limited cart.

On attach the vehicle is welded to the cart: its attitude freezes and its
position moves only with the cart along the travel axis. The cart is a point
mass with Coulomb friction (static breakaway, kinetic while sliding).
"""

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ..errors import InfeasiblePitch
from ..so3 import E3, GIMBAL_MARGIN, euler_to_rotmat
from ..vehicle import RigidState, plant_step, servo_angle
from .references import Pose

FREE_FLIGHT = "free-flight"
ATTACHED = "attached"


def _unit(v, name):
    v = np.array(v, dtype=float).reshape(3)
    n = np.linalg.norm(v)
    if not n > 0.0:
        raise ValueError(f"{name} must be non-zero")
    return v / n


@dataclass(frozen=True, eq=False)
class PerchSite:
    """Attach point on a surface and the outward surface normal."""

    point: np.ndarray
    normal: np.ndarray
    attach_radius: float = 0.05  # m
    align_tolerance: float = math.radians(5.0)  # rad

    def __post_init__(self):
        object.__setattr__(self, "point", np.array(self.point, dtype=float).reshape(3))
        object.__setattr__(self, "normal", _unit(self.normal, "normal"))
        if not (self.attach_radius > 0.0 and self.align_tolerance > 0.0):
            raise ValueError("attach radius and alignment tolerance must be positive")


@dataclass(frozen=True, eq=False)
class CartModel:
    mass: float = 5.0  # kg
    static_friction: float = 6.0  # N
    kinetic_friction: float = 4.0  # N
    axis: np.ndarray = (1.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "axis", _unit(self.axis, "axis"))
        if self.mass <= 0.0:
            raise ValueError("cart mass must be positive")
        if not self.static_friction >= self.kinetic_friction >= 0.0:
            raise ValueError("need static_friction >= kinetic_friction >= 0")


@dataclass(frozen=True, eq=False)
class ContactState:
    mode: str = FREE_FLIGHT
    attach_time: Optional[float] = None
    anchor: Optional[np.ndarray] = None  # vehicle position at attach
    cart_origin: Optional[np.ndarray] = None  # cart reference point at attach
    cart_s: float = 0.0  # displacement along the travel axis
    cart_v: float = 0.0
    eta_target: Optional[float] = None
    axis: Optional[np.ndarray] = None  # cart travel axis

    @property
    def attached(self):
        return self.mode == ATTACHED

    def cart_position(self):
        return self.cart_origin + self.cart_s * self.axis


def perch_pose(site, margin=GIMBAL_MARGIN):
    """Pose whose body z axis equals the surface normal, facing the surface.

    Yaw points the body x axis against the horizontal part of the normal;
    pitch then tilts body z onto the normal.
    """
    n = site.normal
    horizontal = math.hypot(n[0], n[1])
    yaw = math.atan2(-n[1], -n[0]) if horizontal > 1e-12 else 0.0
    pitch = -math.atan2(horizontal, n[2])
    if not abs(pitch) < 0.5 * math.pi - margin:
        raise InfeasiblePitch(f"surface needs pitch {math.degrees(pitch):.2f} deg")
    return Pose(tuple(site.point.tolist()), pitch, yaw)


def alignment_angle(state, site):
    """Angle between the body z axis and the surface normal."""
    z_body = euler_to_rotmat(state.phi) @ E3
    return math.acos(min(1.0, max(-1.0, float(z_body @ site.normal))))


def attach_condition(state, site):
    close = np.linalg.norm(state.p - site.point) <= site.attach_radius
    return bool(close and alignment_angle(state, site) <= site.align_tolerance)


def surface_normal_tilt(state, site):
    """Tilt that points the total thrust into the surface (along ``-normal``)."""
    n_body = euler_to_rotmat(state.phi).T @ site.normal
    return math.atan2(-n_body[0], -n_body[2])


def thrust_vector(state, F, eta):
    """World-frame total thrust for thrusts ``F`` at tilt ``eta``."""
    total = float(np.sum(F))
    body = np.array([math.sin(eta), 0.0, math.cos(eta)]) * total
    return euler_to_rotmat(state.phi) @ body


def _cart_update(s, v, drive, cart, total_mass, dt):
    """Advance the cart one step under a constant driving force."""
    if v == 0.0:
        if abs(drive) <= cart.static_friction:
            return s, 0.0
        accel = (drive - math.copysign(cart.kinetic_friction, drive)) / total_mass
    else:
        accel = (drive - math.copysign(cart.kinetic_friction, v)) / total_mass
    v_new = v + accel * dt
    if v != 0.0 and v_new * v < 0.0:
        t_stop = -v / accel
        return s + v * t_stop + 0.5 * accel * t_stop ** 2, 0.0
    return s + v * dt + 0.5 * accel * dt ** 2, v_new


def perch_and_push_step(state, contact, cmd, site, cart, params, dt, t=0.0):
    """Advance vehicle and contact state by ``dt``.

    Free flight integrates the plant and latches on arrival. Once attached,
    only the tilt servo and the cart move; the vehicle rides with the cart.
    """
    if not contact.attached:
        new = plant_step(state, cmd, params, dt)
        if attach_condition(new, site):
            welded = RigidState(new.p, np.zeros(3), new.phi, np.zeros(3), new.eta)
            latched = ContactState(
                mode=ATTACHED,
                attach_time=t + dt,
                anchor=np.array(new.p),
                cart_origin=np.array(site.point),
                eta_target=surface_normal_tilt(new, site),
                axis=cart.axis,
            )
            return welded, latched
        return new, contact

    eta_mid = servo_angle(state.eta, cmd.eta_d, 0.5 * dt, params.servo_tau)
    total_mass = params.m + cart.mass
    drive = float(thrust_vector(state, cmd.F, eta_mid) @ cart.axis)
    drive -= total_mass * params.g * float(E3 @ cart.axis)
    s, v = _cart_update(contact.cart_s, contact.cart_v, drive, cart, total_mass, dt)
    moved = replace(contact, cart_s=s, cart_v=v)
    new = RigidState(contact.anchor + s * cart.axis, v * cart.axis, state.phi, np.zeros(3),
                     servo_angle(state.eta, cmd.eta_d, dt, params.servo_tau))
    return new, moved
