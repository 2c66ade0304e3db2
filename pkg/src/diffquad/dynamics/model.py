"""Differentiable quadrotor plant.

State evolution follows the four-row rigid-body ODE (position, quaternion
kinematics, translational, rotational), driven by per-rotor quadratic
thrust/torque maps, first-order motor lag, and second-order aerodynamic
drag. Integration is explicit Euler with a zero-order-held command and a
configurable number of physics substeps per control step.

All functions route through diffquad.autodiff.ops, so they run on plain
arrays (inference) or record on the active tape (training) unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import ops
from .allocation import CtbrCommand, ctbr_allocate
from .params import QuadParams, ROTOR_X_SIGN, ROTOR_Y_SIGN, ROTOR_SPIN
from .rotation import quat_derivative, quat_normalize, quat_rotate, quat_rotate_inv
from .state import QuadState


class DynamicsError(Exception):
    pass


def rotor_thrust_torque(omega, params: QuadParams):
    """Per-rotor thrust [N] and signed reaction torque [N m] at speed omega.

    The raw thrust quadratic is negative near idle (k_f0 < 0); propellers
    cannot pull, so thrust clamps at 0. The published polynomial is kept
    as-is above idle; the f_max limit is enforced where speeds are
    commanded (allocation). Torque sign follows spin direction.
    """
    k2, k1, k0 = params.k_f
    f = ops.relu(ops.polyval2(k2, k1, k0, omega))
    t2, t1, t0 = params.k_tau
    tau = ops.mul(ops.polyval2(t2, t1, t0, omega), ROTOR_SPIN)
    return f, tau


def motor_step(omega, omega_cmd, dt, params: QuadParams):
    """First-order rotor speed tracking, explicit Euler, clamped to limits."""
    rate = dt / params.k_motor
    next_omega = ops.add(omega, ops.mul(ops.sub(omega_cmd, omega), rate))
    return ops.clamp(next_omega, 0.0, params.omega_max)


def drag_wrench(v_world, q, omega_body, params: QuadParams):
    """Aerodynamic drag force (body frame) and damping torque.

    Force is quadratic in body-frame velocity and opposes motion
    componentwise; torque is linear damping on the body rates.
    """
    v_body = quat_rotate_inv(q, v_world)
    k_d = np.asarray(params.k_drag)
    f_d = ops.mul(ops.mul(v_body, ops.abs_(v_body)), -k_d)
    tau_d = ops.mul(omega_body, -np.asarray(params.k_omega_damp))
    return f_d, tau_d


def _torque_moment_matrix(params: QuadParams) -> np.ndarray:
    """(4, 2) map from rotor thrusts to (tau_x, tau_y) thrust moments."""
    ell = params.r_arm / np.sqrt(2.0)
    return np.stack([ell * ROTOR_Y_SIGN, -ell * ROTOR_X_SIGN], axis=1)


def derivative(state: QuadState, params: QuadParams, f_rotors, tau_rotors):
    """Time derivative (p_dot, q_dot, v_dot, w_dot) of the rigid-body state."""
    for name, field in (("p", state.p), ("q", state.q), ("v", state.v),
                        ("w", state.w), ("f", f_rotors)):
        if not np.isfinite(np.sum(ops.value(field))):
            raise DynamicsError(f"non-finite {name} entering derivative")

    batch = state.batch
    f_total = ops.reshape(ops.sum_(f_rotors, axis=-1), (batch, 1))
    f_drag, tau_drag = drag_wrench(state.v, state.q, state.w, params)
    f_body = ops.add(ops.concat([np.zeros((batch, 2)), f_total], axis=-1), f_drag)
    v_dot = ops.add(ops.div(quat_rotate(state.q, f_body), params.m), params.g_vec)

    tau_xy = ops.matmul(f_rotors, _torque_moment_matrix(params))
    tau_z = ops.reshape(ops.sum_(tau_rotors, axis=-1), (batch, 1))
    tau_total = ops.add(ops.concat([tau_xy, tau_z], axis=-1), tau_drag)

    J = params.J_vec
    coriolis = ops.cross(state.w, ops.mul(state.w, J))
    w_dot = ops.div(ops.sub(tau_total, coriolis), J)

    q_dot = quat_derivative(state.q, state.w)
    return state.v, q_dot, v_dot, w_dot


@dataclass
class StepInfo:
    rotor_saturated: np.ndarray  # (B,) any rotor thrust or speed clamped


def integrate_step(state: QuadState, cmd: CtbrCommand, control_dt: float,
                   substeps: int, params: QuadParams) -> tuple[QuadState, StepInfo]:
    """Advance one control period under a zero-order-held CTBR command.

    Runs `substeps` explicit-Euler physics substeps; the body-rate inner
    loop re-allocates rotor commands every substep. The quaternion is
    renormalized after each substep.
    """
    if control_dt <= 0 or substeps < 1:
        raise ValueError("control_dt must be positive and substeps >= 1")
    dt = control_dt / substeps
    saturated = np.zeros(state.batch, dtype=bool)

    for k in range(substeps):
        omega_cmd, sat = ctbr_allocate(cmd, state, params)
        saturated |= sat
        f_rot, tau_rot = rotor_thrust_torque(state.rotor, params)
        p_dot, q_dot, v_dot, w_dot = derivative(state, params, f_rot, tau_rot)
        state = QuadState(
            p=ops.add(state.p, ops.mul(p_dot, dt)),
            q=quat_normalize(ops.add(state.q, ops.mul(q_dot, dt))),
            v=ops.add(state.v, ops.mul(v_dot, dt)),
            w=ops.add(state.w, ops.mul(w_dot, dt)),
            rotor=motor_step(state.rotor, omega_cmd, dt, params),
        )
        if not np.isfinite(np.sum(ops.value(state.p)) + np.sum(ops.value(state.w))):
            raise DynamicsError(f"non-finite state after substep {k}")

    return state, StepInfo(rotor_saturated=saturated)
