"""Rotation and translation primitives shared by every loss and metric.

Conventions, fixed project-wide:
  * Euler angles are intrinsic Z-Y-X (yaw, pitch, roll), radians, each
    wrapped to (-pi, pi].
  * Quaternions are stored as (qx, qy, qz, qw), Hamilton product, unit norm.
  * Canonical quaternion sign is qw >= 0 wherever this module produces one.
  * At gimbal lock (|pitch| -> pi/2) the residual rotation goes to yaw and
    roll is set to 0.

All functions are pure and safe for unrestricted concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

TWO_PI = 2.0 * math.pi

#: Fixed ordering of the six pose components used across the package.
COMPONENTS = ("x", "y", "z", "roll", "pitch", "yaw")

#: Indices of the angular components within the 6-vector ordering above.
ANGULAR_INDICES = (3, 4, 5)


def wrap_angle(theta):
    """Wrap an angle (scalar or array) to the interval (-pi, pi]."""
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise ValueError("wrap_angle requires finite input")
    wrapped = math.pi - np.mod(math.pi - theta, TWO_PI)
    if wrapped.ndim == 0:
        return float(wrapped)
    return wrapped


def smooth_l1(x):
    """Smooth L1 distance: 0.5*x**2 for |x| < 1, |x| - 0.5 otherwise."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    out = np.where(ax < 1.0, 0.5 * x * x, ax - 0.5)
    if out.ndim == 0:
        return float(out)
    return out


def smooth_l1_grad(x):
    """Derivative of :func:`smooth_l1`: x inside the quadratic branch, sign(x) outside."""
    x = np.asarray(x, dtype=float)
    out = np.where(np.abs(x) < 1.0, x, np.sign(x))
    if out.ndim == 0:
        return float(out)
    return out


def angular_smooth_l1(pred: float, target: float) -> float:
    """Smooth L1 on the wrapped angle difference; invariant to 2*pi shifts."""
    return smooth_l1(wrap_angle(pred - target))


@dataclass(frozen=True)
class EulerTriple:
    """Roll/pitch/yaw in radians, each wrapped to (-pi, pi] at construction."""

    roll: float
    pitch: float
    yaw: float

    def __post_init__(self):
        for name in ("roll", "pitch", "yaw"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"EulerTriple.{name} must be finite, got {value!r}")
            object.__setattr__(self, name, wrap_angle(value))

    def as_array(self) -> np.ndarray:
        return np.array([self.roll, self.pitch, self.yaw])


@dataclass(frozen=True)
class UnitQuaternion:
    """Quaternion (qx, qy, qz, qw), renormalized to unit norm at construction.

    The zero quaternion is rejected. The stored sign is preserved (q and -q
    describe the same rotation); functions that output a quaternion
    canonicalize to qw >= 0.
    """

    qx: float
    qy: float
    qz: float
    qw: float

    def __post_init__(self):
        q = np.array([self.qx, self.qy, self.qz, self.qw], dtype=float)
        if not np.all(np.isfinite(q)):
            raise ValueError("UnitQuaternion components must be finite")
        norm = float(np.linalg.norm(q))
        if norm < 1e-12:
            raise ValueError("zero quaternion has no defined rotation")
        q /= norm
        for name, value in zip(("qx", "qy", "qz", "qw"), q):
            object.__setattr__(self, name, float(value))

    def as_array(self) -> np.ndarray:
        return np.array([self.qx, self.qy, self.qz, self.qw])

    def canonical(self) -> "UnitQuaternion":
        """Return the sign-canonical form with qw >= 0."""
        if self.qw < 0.0:
            return UnitQuaternion(-self.qx, -self.qy, -self.qz, -self.qw)
        return self


Rotation = Union[EulerTriple, UnitQuaternion]


@dataclass(frozen=True)
class Pose6:
    """A 6-DoF pose: translation in meters plus a rotation in either form."""

    tx: float
    ty: float
    tz: float
    rotation: Rotation

    def __post_init__(self):
        for name in ("tx", "ty", "tz"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"Pose6.{name} must be finite")
        if not isinstance(self.rotation, (EulerTriple, UnitQuaternion)):
            raise TypeError("Pose6.rotation must be EulerTriple or UnitQuaternion")

    @staticmethod
    def identity() -> "Pose6":
        return Pose6(0.0, 0.0, 0.0, EulerTriple(0.0, 0.0, 0.0))

    def translation(self) -> np.ndarray:
        return np.array([self.tx, self.ty, self.tz])

    def euler(self) -> EulerTriple:
        """Rotation as Euler angles, converting from quaternion if needed."""
        if isinstance(self.rotation, EulerTriple):
            return self.rotation
        return quat_to_euler(self.rotation)

    def quaternion(self) -> UnitQuaternion:
        """Rotation as a canonical unit quaternion."""
        if isinstance(self.rotation, UnitQuaternion):
            return self.rotation.canonical()
        return euler_to_quat(self.rotation)

    def as_vector(self) -> np.ndarray:
        """(tx, ty, tz, roll, pitch, yaw)."""
        e = self.euler()
        return np.array([self.tx, self.ty, self.tz, e.roll, e.pitch, e.yaw])

    @staticmethod
    def from_vector(v) -> "Pose6":
        v = np.asarray(v, dtype=float)
        return Pose6(float(v[0]), float(v[1]), float(v[2]),
                     EulerTriple(float(v[3]), float(v[4]), float(v[5])))


def euler_to_quat(e: EulerTriple) -> UnitQuaternion:
    """Convert Z-Y-X Euler angles to a canonical (qw >= 0) unit quaternion."""
    cy, sy = math.cos(e.yaw * 0.5), math.sin(e.yaw * 0.5)
    cp, sp = math.cos(e.pitch * 0.5), math.sin(e.pitch * 0.5)
    cr, sr = math.cos(e.roll * 0.5), math.sin(e.roll * 0.5)
    qw = cr * cp * cy + sr * sp * sy
    qx = sr * cp * cy - cr * sp * sy
    qy = cr * sp * cy + sr * cp * sy
    qz = cr * cp * sy - sr * sp * cy
    return UnitQuaternion(qx, qy, qz, qw).canonical()


def quat_to_euler(q: UnitQuaternion) -> EulerTriple:
    """Convert a unit quaternion to Z-Y-X Euler angles.

    At gimbal lock (|sin(pitch)| within 1e-12 of 1) the convention is
    roll = 0, pitch = +/-pi/2, with the residual rotation assigned to yaw.
    """
    qx, qy, qz, qw = q.qx, q.qy, q.qz, q.qw
    sinp = 2.0 * (qw * qy - qz * qx)
    if abs(sinp) >= 1.0 - 1e-12:
        pitch = math.copysign(0.5 * math.pi, sinp)
        yaw = wrap_angle(2.0 * math.atan2(qz, qw))
        return EulerTriple(0.0, pitch, yaw)
    roll = math.atan2(2.0 * (qw * qx + qy * qz), 1.0 - 2.0 * (qx * qx + qy * qy))
    pitch = math.asin(sinp)
    yaw = math.atan2(2.0 * (qw * qz + qx * qy), 1.0 - 2.0 * (qy * qy + qz * qz))
    return EulerTriple(roll, pitch, yaw)


def quat_angular_distance(q1: UnitQuaternion, q2: UnitQuaternion) -> float:
    """Rotation angle between two quaternions, in [0, pi]; sign-invariant."""
    dot = abs(float(np.dot(q1.as_array(), q2.as_array())))
    return 2.0 * math.acos(min(1.0, dot))


def euler_to_matrix(e: EulerTriple) -> np.ndarray:
    """Rotation matrix R = Rz(yaw) @ Ry(pitch) @ Rx(roll)."""
    cr, sr = math.cos(e.roll), math.sin(e.roll)
    cp, sp = math.cos(e.pitch), math.sin(e.pitch)
    cy, sy = math.cos(e.yaw), math.sin(e.yaw)
    return np.array([
        [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
        [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
        [-sp, cp * sr, cp * cr],
    ])


def matrix_to_euler(rot: np.ndarray) -> EulerTriple:
    """Inverse of :func:`euler_to_matrix`, with the same gimbal convention."""
    sinp = -float(rot[2, 0])
    sinp = max(-1.0, min(1.0, sinp))
    if abs(sinp) >= 1.0 - 1e-12:
        pitch = math.copysign(0.5 * math.pi, sinp)
        # With roll forced to 0, yaw absorbs the remaining rotation.
        yaw = math.atan2(-float(rot[0, 1]), float(rot[1, 1]))
        return EulerTriple(0.0, pitch, yaw)
    roll = math.atan2(float(rot[2, 1]), float(rot[2, 2]))
    pitch = math.asin(sinp)
    yaw = math.atan2(float(rot[1, 0]), float(rot[0, 0]))
    return EulerTriple(roll, pitch, yaw)
