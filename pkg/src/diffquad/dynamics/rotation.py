"""Quaternion geometry built from tape-recordable operations.

Quaternions are (..., 4), w-first. Rotation helpers assume unit quaternions;
the integrator renormalizes after every substep.
"""

from __future__ import annotations

import numpy as np

from ..autodiff import ops

_CONJ = np.array([1.0, -1.0, -1.0, -1.0])


def quat_identity(batch=None):
    if batch is None:
        return np.array([1.0, 0.0, 0.0, 0.0])
    out = np.zeros((batch, 4))
    out[:, 0] = 1.0
    return out


def quat_conj(q):
    return ops.mul(q, _CONJ)


def _pad_zero(v):
    """(..., 3) vector -> (..., 4) pure quaternion (0, v)."""
    zeros = np.zeros(np.shape(ops.value(v))[:-1] + (1,))
    return ops.concat([zeros, v], axis=-1)


def quat_rotate(q, v):
    """Rotate body-frame vectors into the world frame: q (0,v) q*."""
    return ops.quat_rotate(q, v)


def quat_rotate_inv(q, v):
    """Rotate world-frame vectors into the body frame."""
    return ops.quat_rotate(quat_conj(q), v)


def quat_normalize(q):
    n = ops.norm2(q, axis=-1)
    shape = np.shape(ops.value(n))
    if shape:
        n = ops.reshape(n, shape + (1,))
    return ops.div(q, n)


def quat_derivative(q, omega):
    """Kinematic rate q_dot = 0.5 * q ⊗ (0, omega)."""
    return ops.mul(ops.quat_mul(q, _pad_zero(omega)), 0.5)


def quat_from_axis_angle(axis, angle):
    """Unit quaternion for a rotation of `angle` about `axis` (numpy only)."""
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis, axis=-1, keepdims=True)
    half = 0.5 * np.asarray(angle, dtype=np.float64)
    w = np.cos(half)[..., None]
    xyz = np.sin(half)[..., None] * axis
    return np.concatenate([w, xyz], axis=-1)


def quat_yaw(q):
    """Yaw (rotation about world z) of a unit quaternion; differentiable."""
    w, x, y, z = (ops.col(q, i) for i in range(4))
    s = ops.mul(ops.add(ops.mul(w, z), ops.mul(x, y)), 2.0)
    c = ops.sub(1.0, ops.mul(ops.add(ops.mul(y, y), ops.mul(z, z)), 2.0))
    return ops.atan2(s, c)


def wrap_angle(theta):
    """Wrap to (-pi, pi]; the 2*pi offset is constant under differentiation."""
    tv = ops.value(theta)
    offset = 2.0 * np.pi * np.round(tv / (2.0 * np.pi))
    return ops.sub(theta, offset)
