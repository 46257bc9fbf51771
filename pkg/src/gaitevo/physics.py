"""Scalar physics primitives for the quadruped surrogate.

World frame: ``x`` to the robot's right, ``y`` forward, ``z`` up.  The body
frame uses the same axes at rest.  Quaternions are ``(w, x, y, z)`` and
rotate body-frame vectors into the world frame.  Angular velocity is kept in
the body frame.

The legs are massless.  Joint 0 abducts the leg about the body's forward
axis, joints 1 and 2 pitch the thigh and shank in the (abducted) sagittal
plane.  Positive joint-1 angles swing the foot backwards, positive joint-2
angles flex the knee and lift the foot.  On the left legs joint 0 is
mirrored so a positive angle always splays the foot outwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, SimulationDiverged

GRAVITY = 9.81

# hip mounts in the body frame, LEG_NAMES order (FL, FR, BL, BR)
DEFAULT_HIPS = ((-0.1, 0.2, 0.0), (0.1, 0.2, 0.0), (-0.1, -0.2, 0.0), (0.1, -0.2, 0.0))
DEFAULT_SIDES = (-1.0, 1.0, -1.0, 1.0)


@dataclass(frozen=True)
class GroundModel:
    stiffness: float = 5000.0
    damping: float = 100.0
    friction: float = 0.8
    tangential_gain: float = 30.0

    def __post_init__(self):
        if self.stiffness < 0 or self.damping < 0 or self.tangential_gain < 0:
            raise ParameterError("ground stiffness and damping gains must be non-negative")
        if self.friction < 0:
            raise ParameterError("friction coefficient must be non-negative")


@dataclass(frozen=True)
class RobotConfig:
    """Geometry, inertia and actuation of the surrogate robot.

    The inertia is about the body's own ``(x, y, z)`` axes and includes a
    lumped share of the leg mass.
    """

    mass: float = 5.0
    inertia: tuple = (0.15, 0.08, 0.2)
    hips: tuple = DEFAULT_HIPS
    segments: tuple = (0.1, 0.18, 0.18)
    sides: tuple = DEFAULT_SIDES
    servo_tau: float = 0.05
    joint_limits: tuple = ((-0.5, 0.5), (-0.5, 1.6), (0.0, 2.6))
    gravity: float = GRAVITY
    fall_height_fraction: float = 0.25

    def __post_init__(self):
        if self.mass <= 0:
            raise ParameterError("mass must be positive")
        if len(self.inertia) != 3 or min(self.inertia) <= 0:
            raise ParameterError("inertia needs three positive entries")
        if len(self.segments) != 3 or min(self.segments) <= 0:
            raise ParameterError("segment lengths must be positive")
        if len(self.hips) != 4 or len(self.sides) != 4:
            raise ParameterError("need four hip positions and four side signs")
        if self.servo_tau <= 0:
            raise ParameterError("servo time constant must be positive")


def contact_stability_margin(config: RobotConfig, ground: GroundModel, dt: float) -> float:
    """``k*dt^2/m`` for the lightest single-foot load; should be << 1."""
    return ground.stiffness * dt * dt / config.mass


# --------------------------------------------------------------------------
# kinematics


def leg_forward_kinematics(angles, leg_index: int, config: RobotConfig):
    """Foot position relative to the hip mount, body frame."""
    th0, th1, th2 = angles
    l0, l1, l2 = config.segments
    side = config.sides[leg_index]
    knee = th1 - th2
    y = -(l1 * math.sin(th1) + l2 * math.sin(knee))
    z = -(l0 + l1 * math.cos(th1) + l2 * math.cos(knee))
    s0 = math.sin(th0)
    c0 = math.cos(th0)
    return (-side * z * s0, y, z * c0)


def foot_in_body(angles, leg_index: int, config: RobotConfig):
    hx, hy, hz = config.hips[leg_index]
    fx, fy, fz = leg_forward_kinematics(angles, leg_index, config)
    return (hx + fx, hy + fy, hz + fz)


# --------------------------------------------------------------------------
# quaternion helpers


def quat_rotate(q, v):
    w, x, y, z = q
    vx, vy, vz = v
    # t = 2 * cross(q_vec, v)
    tx = 2.0 * (y * vz - z * vy)
    ty = 2.0 * (z * vx - x * vz)
    tz = 2.0 * (x * vy - y * vx)
    return (vx + w * tx + (y * tz - z * ty),
            vy + w * ty + (z * tx - x * tz),
            vz + w * tz + (x * ty - y * tx))


def quat_rotate_inv(q, v):
    w, x, y, z = q
    return quat_rotate((w, -x, -y, -z), v)


def quat_mul(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw)


def quat_integrate(q, omega_body, dt):
    """Rotate ``q`` by the body-frame rotation vector ``omega_body * dt``."""
    wx, wy, wz = omega_body
    rate = math.sqrt(wx * wx + wy * wy + wz * wz)
    half = 0.5 * rate * dt
    if rate > 0.0:
        s = math.sin(half) / rate
        dq = (math.cos(half), wx * s, wy * s, wz * s)
    else:
        dq = (1.0, 0.0, 0.0, 0.0)
    w, x, y, z = quat_mul(q, dq)
    n = math.sqrt(w * w + x * x + y * y + z * z)
    return (w / n, x / n, y / n, z / n)


def up_angle(q) -> float:
    """Angle between the world up vector and the body's up vector."""
    w, x, y, z = q
    # third column of the rotation matrix
    r02 = 2.0 * (x * z + w * y)
    r12 = 2.0 * (y * z - w * x)
    r22 = 1.0 - 2.0 * (x * x + y * y)
    return math.atan2(math.sqrt(r02 * r02 + r12 * r12), r22)


# --------------------------------------------------------------------------
# contact, actuation, rigid body


def contact_force(foot_pos, foot_vel, ground: GroundModel):
    """Spring-damper normal force with a Coulomb-limited viscous tangential force."""
    pz = foot_pos[2]
    if pz >= 0.0:
        return (0.0, 0.0, 0.0)
    vx, vy, vz = foot_vel
    normal = ground.stiffness * (-pz) - ground.damping * vz
    if normal <= 0.0:
        return (0.0, 0.0, 0.0)
    fx = -ground.tangential_gain * vx
    fy = -ground.tangential_gain * vy
    ft = math.sqrt(fx * fx + fy * fy)
    limit = ground.friction * normal
    if ft > limit:
        scale = limit / ft
        fx *= scale
        fy *= scale
    return (fx, fy, normal)


def servo_gain(tau: float, dt: float) -> float:
    """Per-step blend factor of an exactly discretised first-order lag."""
    if tau <= 0.0:
        raise ParameterError(f"servo time constant must be positive, got {tau!r}")
    return -math.expm1(-dt / tau)


def servo_step(actual: float, target: float, tau: float, dt: float, limits=None) -> float:
    out = actual + (target - actual) * servo_gain(tau, dt)
    if limits is not None:
        lo, hi = limits
        if out < lo:
            out = lo
        elif out > hi:
            out = hi
    return out


@dataclass
class RobotState:
    """Body pose and velocities, actual joint angles and last contact forces."""

    position: np.ndarray
    orientation: np.ndarray
    velocity: np.ndarray
    angular_velocity: np.ndarray  # body frame
    joints: np.ndarray = field(default_factory=lambda: np.zeros((4, 3)))
    contact: np.ndarray = field(default_factory=lambda: np.zeros((4, 3)))

    @classmethod
    def at_rest(cls, height: float, joints=None):
        return cls(
            position=np.array([0.0, 0.0, height]),
            orientation=np.array([1.0, 0.0, 0.0, 0.0]),
            velocity=np.zeros(3),
            angular_velocity=np.zeros(3),
            joints=np.zeros((4, 3)) if joints is None else np.array(joints, dtype=float),
        )

    def copy(self) -> "RobotState":
        return RobotState(self.position.copy(), self.orientation.copy(), self.velocity.copy(),
                          self.angular_velocity.copy(), self.joints.copy(), self.contact.copy())


def rigid_body_update(pos, quat, vel, omega, forces, points, mass, inertia, gravity, dt):
    """Semi-implicit step of a free rigid body.

    ``forces`` are world-frame vectors applied at world-frame ``points``.
    Returns ``(pos, quat, vel, omega)`` as tuples.
    """
    fx = fy = fz = 0.0
    tx = ty = tz = 0.0
    px, py, pz = pos
    for (f0, f1, f2), (p0, p1, p2) in zip(forces, points):
        fx += f0
        fy += f1
        fz += f2
        rx = p0 - px
        ry = p1 - py
        rz = p2 - pz
        tx += ry * f2 - rz * f1
        ty += rz * f0 - rx * f2
        tz += rx * f1 - ry * f0
    vx = vel[0] + (fx / mass) * dt
    vy = vel[1] + (fy / mass) * dt
    vz = vel[2] + (fz / mass - gravity) * dt

    bx, by, bz = quat_rotate_inv(quat, (tx, ty, tz))
    ix, iy, iz = inertia
    # Angular momentum takes the torque impulse and is conserved in the world
    # frame while the body turns, so torque-free spin cannot gain energy the
    # way an explicit step of Euler's equations does.
    lx = ix * omega[0] + bx * dt
    ly = iy * omega[1] + by * dt
    lz = iz * omega[2] + bz * dt
    lw = quat_rotate(quat, (lx, ly, lz))
    new_quat = quat_integrate(quat, (lx / ix, ly / iy, lz / iz), dt)
    lx, ly, lz = quat_rotate_inv(new_quat, lw)

    new_pos = (px + vx * dt, py + vy * dt, pz + vz * dt)
    return new_pos, new_quat, (vx, vy, vz), (lx / ix, ly / iy, lz / iz)


def body_step(state: RobotState, foot_forces, dt: float, config: RobotConfig, points=None) -> RobotState:
    """Integrate the body one step under gravity plus the given foot forces.

    ``points`` are the world positions where ``foot_forces`` act; by default
    the feet implied by ``state.joints``.
    """
    forces = [tuple(float(c) for c in f) for f in np.asarray(foot_forces, dtype=float).reshape(-1, 3)]
    if not all(math.isfinite(c) for f in forces for c in f):
        raise SimulationDiverged(0, "non-finite contact force")
    q = tuple(state.orientation)
    if points is None:
        points = []
        for i in range(4):
            b = foot_in_body(state.joints[i], i, config)
            r = quat_rotate(q, b)
            points.append((state.position[0] + r[0], state.position[1] + r[1], state.position[2] + r[2]))
    pos, quat, vel, omega = rigid_body_update(
        tuple(state.position), q, tuple(state.velocity), tuple(state.angular_velocity),
        forces, [tuple(p) for p in points], config.mass, config.inertia, config.gravity, dt)
    out = state.copy()
    out.position = np.array(pos)
    out.orientation = np.array(quat)
    out.velocity = np.array(vel)
    out.angular_velocity = np.array(omega)
    out.contact = np.array(forces).reshape(4, 3) if len(forces) == 4 else out.contact
    return out


def standing_height(joints, config: RobotConfig) -> float:
    """Body height at which the lowest foot just touches flat ground."""
    return max(-foot_in_body(joints[i], i, config)[2] for i in range(4))


def mechanical_energy(state: RobotState, config: RobotConfig, ground: GroundModel) -> float:
    """Kinetic + gravitational + contact-spring energy."""
    v = state.velocity
    w = state.angular_velocity
    kin = 0.5 * config.mass * float(v @ v) + 0.5 * float(np.dot(config.inertia, w * w))
    pot = config.mass * config.gravity * float(state.position[2])
    q = tuple(state.orientation)
    spring = 0.0
    for i in range(4):
        b = foot_in_body(state.joints[i], i, config)
        z = state.position[2] + quat_rotate(q, b)[2]
        if z < 0.0:
            spring += 0.5 * ground.stiffness * z * z
    return kin + pot + spring
