import math

import numpy as np
import pytest

from tiltrotor.errors import InfeasiblePitch
from tiltrotor.sim.contact import (
    ATTACHED,
    CartModel,
    ContactState,
    PerchSite,
    attach_condition,
    perch_and_push_step,
    perch_pose,
)
from tiltrotor.so3 import E3, euler_to_rotmat
from tiltrotor.vehicle import ActuatorCommand, RigidState

CART = CartModel(mass=5.0, static_friction=6.0, kinetic_friction=4.0, axis=(1.0, 0.0, 0.0))
# vertical wall facing -x; pushing along +x needs no work against gravity
WALL = PerchSite((1.0, 0.0, 1.0), (-1.0, 0.0, 0.0))


def attached_on_wall():
    """Vehicle latched to the wall with the thrust tilted onto +x."""
    state = RigidState([1.0, 0.0, 1.0], np.zeros(3), np.zeros(3), np.zeros(3), math.pi / 2)
    contact = ContactState(mode=ATTACHED, attach_time=0.0, anchor=np.array(state.p),
                           cart_origin=np.array(WALL.point), eta_target=math.pi / 2, axis=CART.axis)
    return state, contact


def push(params, thrust_each, steps=2000, dt=1e-3):
    state, contact = attached_on_wall()
    cmd = ActuatorCommand(math.pi / 2, [thrust_each] * 4)
    history = []
    for k in range(steps):
        state, contact = perch_and_push_step(state, contact, cmd, WALL, CART, params, dt, k * dt)
        history.append((state, contact))
    return history


def test_cart_stays_put_below_breakaway(params):
    history = push(params, 0.99 * CART.static_friction / 4)
    assert all(c.cart_s == 0.0 and c.cart_v == 0.0 for _, c in history)


def test_cart_accelerates_at_newton_rate_after_breakaway(params):
    total = 1.2 * CART.static_friction
    dt = 1e-3
    history = push(params, total / 4, steps=1000, dt=dt)
    v = np.array([c.cart_v for _, c in history])
    t = dt * np.arange(1, len(v) + 1)
    expected = (total - CART.kinetic_friction) / (params.m + CART.mass)
    np.testing.assert_allclose(v, expected * t, rtol=1e-9)


def test_relative_pose_is_constant_while_attached(params):
    history = push(params, 2.5)
    offsets = np.array([s.p - c.cart_position() for s, c in history])
    assert np.max(np.abs(offsets - offsets[0])) <= 1e-12
    assert all(np.array_equal(s.phi, np.zeros(3)) for s, _ in history)


def test_no_attach_when_misaligned(params):
    site = PerchSite((0.0, 0.0, 1.0), (-math.sin(0.5), 0.0, math.cos(0.5)))
    state = RigidState.hover(p=site.point)
    assert not attach_condition(state, site)
    cmd = ActuatorCommand(0.0, [params.hover_thrust] * 4)
    contact = ContactState()
    for k in range(50):
        state, contact = perch_and_push_step(state, contact, cmd, site, CART, params, 1e-3, k * 1e-3)
        assert not contact.attached


def test_attach_latches_when_aligned(params):
    site = PerchSite((0.0, 0.0, 1.0), (0.0, 0.0, 1.0))
    state = RigidState.hover(p=(0.0, 0.0, 1.0))
    cmd = ActuatorCommand(0.0, [params.hover_thrust] * 4)
    state, contact = perch_and_push_step(state, ContactState(), cmd, site, CART, params, 1e-3, 2.0)
    assert contact.attached and contact.attach_time == pytest.approx(2.001)
    np.testing.assert_array_equal(state.v, 0.0)


def test_perch_pose_aligns_body_z_with_normal():
    n = np.array([-math.sin(math.radians(35)), 0.0, math.cos(math.radians(35))])
    pose = perch_pose(PerchSite((1.5, 0.8, 1.5), n))
    assert pose.pitch == pytest.approx(-math.radians(35))
    R = euler_to_rotmat((0.0, pose.pitch, pose.yaw))
    np.testing.assert_allclose(R @ E3, n, atol=1e-12)


def test_perch_pose_rejects_vertical_wall():
    with pytest.raises(InfeasiblePitch):
        perch_pose(WALL)


def test_cart_validation():
    with pytest.raises(ValueError):
        CartModel(static_friction=1.0, kinetic_friction=2.0)
    with pytest.raises(ValueError):
        PerchSite((0, 0, 0), (0, 0, 0))
    assert np.linalg.norm(PerchSite((0, 0, 0), (3.0, 0.0, 4.0)).normal) == pytest.approx(1.0, abs=1e-15)
