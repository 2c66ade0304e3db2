"""Inner-loop allocation: CTBR command -> four rotor speed commands.

A proportional body-rate loop converts the desired rates into a desired
torque (via the diagonal inertia), the X-configuration mixer distributes
total thrust and torque over the rotors, and the thrust quadratic is
inverted to speed commands. Saturation clamps silently and is flagged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import ops
from .params import QuadParams, mixer_matrices


@dataclass
class CtbrCommand:
    """Mass-normalized collective thrust [m/s^2] and desired body rates [rad/s].

    thrust_norm: (B,) array or Var; omega_des: (B, 3).
    """

    thrust_norm: object
    omega_des: object

    @classmethod
    def hover(cls, batch: int, params: QuadParams) -> "CtbrCommand":
        return cls(thrust_norm=np.full(batch, params.hover_thrust_norm),
                   omega_des=np.zeros((batch, 3)))


def ctbr_allocate(cmd: CtbrCommand, state, params: QuadParams):
    """Rotor speed commands realizing a CTBR setpoint at the current state.

    Returns (omega_cmd (B,4), saturated (B,) bool). The P gains are in 1/s
    (desired angular acceleration per unit rate error), so desired torque is
    J * kp * (omega_des - omega).
    """
    kp_j = np.asarray(params.kp_omega) * params.J_vec
    tau_des = ops.mul(ops.sub(cmd.omega_des, state.w), kp_j)

    batch = np.shape(ops.value(tau_des))[0]
    thrust_total = ops.reshape(ops.mul(cmd.thrust_norm, params.m), (batch, 1))
    wrench = ops.concat([thrust_total, tau_des], axis=-1)

    _, a_inv = mixer_matrices(params)
    f_des = ops.matmul(wrench, a_inv.T)

    f_val = ops.value(f_des)
    saturated = np.any((f_val < 0.0) | (f_val > params.f_max), axis=-1)
    f_des = ops.clamp(f_des, 0.0, params.f_max)

    # positive root of k2 x^2 + k1 x + (k0 - f) = 0
    k2, k1, k0 = params.k_f
    disc = ops.add(ops.mul(f_des, 4.0 * k2), k1 * k1 - 4.0 * k2 * k0)
    omega_cmd = ops.mul(ops.sub(ops.sqrt(disc), k1), 1.0 / (2.0 * k2))

    saturated |= np.any(ops.value(omega_cmd) > params.omega_max, axis=-1)
    omega_cmd = ops.clamp(omega_cmd, 0.0, params.omega_max)
    return omega_cmd, saturated
