import numpy as np
import pytest

from diffquad.autodiff import Tape, ops
from diffquad.dynamics import (CtbrCommand, QuadState, ctbr_allocate, derivative,
                               drag_wrench, get_params, integrate_step,
                               mixer_matrices, motor_step, rotor_thrust_torque)
from diffquad.dynamics.rotation import (quat_derivative, quat_from_axis_angle,
                                        quat_normalize, quat_rotate,
                                        quat_rotate_inv, quat_yaw)

P = get_params("vis-h")
CONTROL_DT = 1.0 / 30.0
SUBSTEPS = 4


def rot_matrix_from_quat(q):
    """Independent rotation-matrix oracle (w-first unit quaternion)."""
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


class TestQuaternionKinematics:
    def test_zero_rate_zero_derivative(self):
        q = np.array([[1.0, 0, 0, 0]])
        qdot = quat_derivative(q, np.zeros((1, 3)))
        np.testing.assert_array_equal(qdot, np.zeros((1, 4)))

    def test_pure_yaw_rate(self):
        # q identity, omega=(0,0,2): qdot = 0.5 * (1,0,0,0) ⊗ (0,0,0,2)
        q = np.array([[1.0, 0, 0, 0]])
        qdot = quat_derivative(q, np.array([[0.0, 0.0, 2.0]]))
        np.testing.assert_allclose(qdot, np.array([[0.0, 0.0, 0.0, 1.0]]), atol=1e-15)

    def test_yaw_integration_matches_axis_angle(self):
        # integrate omega_z = pi for 1 s at dt=1e-4; closed-form oracle is the
        # axis-angle rotation by pi about z
        dt = 1e-4
        q = np.array([[1.0, 0, 0, 0]])
        w = np.array([[0.0, 0.0, np.pi]])
        for _ in range(10000):
            q = quat_normalize(q + quat_derivative(q, w) * dt)
        expected = quat_from_axis_angle(np.array([0.0, 0, 1]), np.pi)
        # angle error between quaternions
        dot = abs(float(np.sum(q[0] * expected)))
        angle_err = 2.0 * np.arccos(min(dot, 1.0))
        assert angle_err < 1e-3

    def test_rotation_matches_matrix_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            q = rng.normal(size=4)
            q /= np.linalg.norm(q)
            v = rng.normal(size=3)
            R = rot_matrix_from_quat(q)
            np.testing.assert_allclose(
                quat_rotate(q[None], v[None])[0], R @ v, atol=1e-12)
            np.testing.assert_allclose(
                quat_rotate_inv(q[None], v[None])[0], R.T @ v, atol=1e-12)

    def test_yaw_extraction(self):
        q = quat_from_axis_angle(np.array([0.0, 0, 1]), 0.7)
        assert float(quat_yaw(q[None])[0]) == pytest.approx(0.7, abs=1e-12)


class TestRotorModel:
    def test_idle_thrust_clamped_to_zero(self):
        f, _ = rotor_thrust_torque(np.zeros((1, 4)), P)
        k2, k1, k0 = P.k_f
        assert k0 == pytest.approx(-2.62e-2)
        np.testing.assert_array_equal(f, np.zeros((1, 4)))

    def test_thrust_at_1000(self):
        f, _ = rotor_thrust_torque(np.full((1, 1), 1000.0), P)
        expected = 4.04e-7 * 1e6 + 2.56e-5 * 1e3 - 2.62e-2
        assert float(f[0, 0]) == pytest.approx(expected, abs=1e-9)
        assert float(f[0, 0]) == pytest.approx(0.4034, abs=1e-4)

    def test_polynomial_left_as_published_at_limit(self):
        # the published map exceeds the 5.12 N per-motor limit at omega_max;
        # the limit is enforced by allocation, not by the map itself
        f, _ = rotor_thrust_torque(np.full((1, 1), 4200.0), P)
        assert float(f[0, 0]) == pytest.approx(7.21, abs=0.01)

    def test_torque_signs_follow_spin(self):
        _, tau = rotor_thrust_torque(np.full((1, 4), 2000.0), P)
        signs = np.sign(tau[0])
        np.testing.assert_array_equal(signs, [-1.0, 1.0, 1.0, -1.0])
        assert float(np.sum(tau)) == pytest.approx(0.0, abs=1e-15)

    def test_motor_fixed_point(self):
        om = np.full((1, 4), 1500.0)
        np.testing.assert_array_equal(motor_step(om, om, 1 / 120, P), om)

    def test_motor_single_euler_step(self):
        nxt = motor_step(np.zeros((1, 1)), np.full((1, 1), 1000.0), 1 / 120, P)
        assert float(nxt[0, 0]) == pytest.approx(1000.0 / 0.035 / 120.0, rel=1e-12)
        assert float(nxt[0, 0]) == pytest.approx(238.1, abs=0.1)

    def test_motor_rise_time_632(self):
        # 63.2% of a step is reached at t = k_motor, within one substep
        dt = CONTROL_DT / SUBSTEPS
        om = np.zeros((1, 1))
        cmd = np.full((1, 1), 2000.0)
        t, crossed = 0.0, None
        for _ in range(200):
            om = motor_step(om, cmd, dt, P)
            t += dt
            if crossed is None and float(om[0, 0]) >= (1 - np.exp(-1)) * 2000.0:
                crossed = t
                break
        assert crossed is not None
        assert abs(crossed - P.k_motor) <= dt + 1e-12


class TestDrag:
    def test_zero_state_zero_wrench(self):
        q = np.array([[1.0, 0, 0, 0]])
        f, tau = drag_wrench(np.zeros((1, 3)), q, np.zeros((1, 3)), P)
        np.testing.assert_array_equal(f, np.zeros((1, 3)))
        np.testing.assert_array_equal(tau, np.zeros((1, 3)))

    def test_quadratic_drag_value(self):
        q = np.array([[1.0, 0, 0, 0]])  # body == world
        f, _ = drag_wrench(np.array([[2.0, 0, 0]]), q, np.zeros((1, 3)), P)
        assert float(f[0, 0]) == pytest.approx(-0.05 * 2.0 * 2.0)

    def test_drag_opposes_motion(self):
        rng = np.random.default_rng(1)
        for _ in range(1000):
            q = rng.normal(size=(1, 4))
            q /= np.linalg.norm(q)
            v = rng.normal(size=(1, 3)) * 5.0
            w = rng.normal(size=(1, 3))
            f, tau = drag_wrench(v, q, w, P)
            v_body = quat_rotate_inv(q, v)
            assert float(np.sum(f * v_body)) <= 1e-12
            assert float(np.sum(tau * w)) <= 1e-12


def hover_command(batch=1):
    return CtbrCommand.hover(batch, P)


class TestDerivative:
    def test_hover_equilibrium_is_fixed_point(self):
        state = QuadState.hover(1, P)
        f, tau = rotor_thrust_torque(state.rotor, P)
        p_dot, q_dot, v_dot, w_dot = derivative(state, P, f, tau)
        for d in (p_dot, q_dot, v_dot, w_dot):
            assert float(np.max(np.abs(d))) < 1e-12

    def test_free_fall_acceleration(self):
        state = QuadState.hover(1, P)
        state.rotor[:] = 0.0
        f, tau = rotor_thrust_torque(state.rotor, P)
        _, _, v_dot, _ = derivative(state, P, f, tau)
        np.testing.assert_allclose(v_dot[0], [0.0, 0.0, -9.81], atol=1e-12)

    def test_gyroscopic_coupling(self):
        state = QuadState.hover(1, P)
        state.rotor[:] = 0.0
        state.w = np.array([[1.0, 2.0, 0.0]])
        f, tau = rotor_thrust_torque(state.rotor, P)
        _, _, _, w_dot = derivative(state, P, f, tau)
        J = P.J_vec
        w = state.w[0]
        expected = (-np.asarray(P.k_omega_damp) * w - np.cross(w, J * w)) / J
        np.testing.assert_allclose(w_dot[0], expected, atol=1e-12)

    def test_pure_axis_rate_has_no_coupling(self):
        # omega aligned with a principal axis: omega x J omega = 0
        w = np.array([1.0, 0.0, 0.0])
        assert np.allclose(np.cross(w, P.J_vec * w), 0.0)


class TestAllocation:
    def test_hover_symmetry(self):
        state = QuadState.hover(1, P)
        omega_cmd, sat = ctbr_allocate(hover_command(), state, P)
        assert not sat[0]
        assert float(np.ptp(omega_cmd)) < 1e-9
        f = P.thrust_from_omega(omega_cmd)
        assert float(np.sum(f)) == pytest.approx(P.m * 9.81, rel=1e-12)

    def test_roll_torque_sign_matches_mixer_oracle(self):
        # positive rate error about +x (body y to the left): the mixer must
        # raise thrust on the +y rotors; verify against the A matrix directly
        state = QuadState.hover(1, P)
        cmd = CtbrCommand(thrust_norm=np.full(1, 9.81),
                          omega_des=np.array([[1.0, 0.0, 0.0]]))
        omega_cmd, _ = ctbr_allocate(cmd, state, P)
        f = P.thrust_from_omega(omega_cmd)[0]
        A, _ = mixer_matrices(P)
        wrench = A @ f
        assert wrench[1] > 0.0  # realized tau_x positive
        # +y rotors are indices 0 (front-left) and 2 (rear-left)
        assert f[0] > f[1] and f[2] > f[3]

    def test_zero_thrust_clamps(self):
        state = QuadState.hover(1, P)
        cmd = CtbrCommand(thrust_norm=np.zeros(1), omega_des=np.zeros((1, 3)))
        omega_cmd, _ = ctbr_allocate(cmd, state, P)
        f = P.thrust_from_omega(omega_cmd)
        np.testing.assert_allclose(f, 0.0, atol=1e-12)

    def test_closed_loop_rate_tracking(self):
        state = QuadState.hover(1, P)
        cmd = CtbrCommand(thrust_norm=np.full(1, 9.81),
                          omega_des=np.array([[1.0, 0.0, 0.0]]))
        for _ in range(15):  # 0.5 s
            state, _ = integrate_step(state, cmd, CONTROL_DT, SUBSTEPS, P)
        assert float(state.w[0, 0]) == pytest.approx(1.0, abs=0.05)


class TestIntegrateStep:
    def test_hover_drift_bound(self):
        state = QuadState.hover(1, P, pos=[0.0, 0.0, 1.0])
        cmd = hover_command()
        for _ in range(30):  # 1 s
            state, info = integrate_step(state, cmd, CONTROL_DT, SUBSTEPS, P)
            assert not info.rotor_saturated.any()
        drift = np.linalg.norm(state.p[0] - np.array([0.0, 0.0, 1.0]))
        assert drift < 1e-2

    def test_free_fall_one_second(self):
        # vacuum variant: the published z drag coefficient caps fall speed
        # near 2 m/s, so the 0.5*g*t^2 oracle needs drag off
        import dataclasses
        p_vac = dataclasses.replace(P, k_drag=(0.0, 0.0, 0.0))
        state = QuadState.hover(1, p_vac, pos=[0.0, 0.0, 10.0])
        state.rotor[:] = 0.0
        cmd = CtbrCommand(thrust_norm=np.zeros(1), omega_des=np.zeros((1, 3)))
        # zero-thrust command keeps rotors at the zero-thrust idle speed
        for _ in range(30):
            state, _ = integrate_step(state, cmd, CONTROL_DT, SUBSTEPS, p_vac)
        dz = float(state.p[0, 2]) - 10.0
        n = 30 * SUBSTEPS
        exact_euler = -0.5 * 9.81 * (1.0 - 1.0 / n)  # explicit Euler closed form
        assert dz == pytest.approx(exact_euler, abs=1e-6)
        assert abs(dz - (-0.5 * 9.81)) / (0.5 * 9.81) < 0.01

    def test_quaternion_stays_normalized(self):
        rng = np.random.default_rng(2)
        state = QuadState.hover(4, P, pos=[0.0, 0.0, 2.0])
        state.v = rng.normal(size=(4, 3)) * 0.5
        state.w = rng.normal(size=(4, 3)) * 0.5
        cmd = CtbrCommand(thrust_norm=np.full(4, 9.0),
                          omega_des=rng.normal(size=(4, 3)) * 0.5)
        for _ in range(60):
            state, _ = integrate_step(state, cmd, CONTROL_DT, SUBSTEPS, P)
            norms = np.linalg.norm(state.q, axis=-1)
            np.testing.assert_allclose(norms, 1.0, atol=1e-9)
            assert np.all(state.rotor >= 0.0) and np.all(state.rotor <= P.omega_max)

    def test_determinism_bitwise(self):
        def run():
            state = QuadState.hover(2, P, pos=[0.1, -0.2, 1.5])
            state.v = np.array([[0.3, -0.2, 0.1], [0.0, 0.1, -0.1]])
            cmd = CtbrCommand(thrust_norm=np.array([9.5, 10.0]),
                              omega_des=np.array([[0.2, -0.1, 0.05], [0.0, 0.3, -0.2]]))
            for _ in range(20):
                state, _ = integrate_step(state, cmd, CONTROL_DT, SUBSTEPS, P)
            return state

        s1, s2 = run(), run()
        assert np.array_equal(s1.p, s2.p) and np.array_equal(s1.q, s2.q)
        assert np.array_equal(s1.v, s2.v) and np.array_equal(s1.rotor, s2.rotor)


class TestRolloutGradients:
    def _rollout_loss(self, x, horizon, batch=2):
        """Scalar loss of a rollout; x = [thrust_norm, wx, wy, wz] command."""
        state = QuadState(
            p=np.tile([0.1, -0.1, 1.2], (batch, 1)),
            q=np.tile(quat_from_axis_angle(np.array([0.3, 0.5, 1.0]), 0.2), (batch, 1)),
            v=np.tile([0.3, -0.2, 0.1], (batch, 1)),
            w=np.tile([0.1, -0.2, 0.15], (batch, 1)),
            rotor=np.full((batch, 4), P.hover_omega),
        )
        thrust = ops.mul(ops.col(x, 0), np.ones(batch))
        omega_des = ops.mul(ops.reshape(ops.cols(x, 1, 4), (1, 3)), np.ones((batch, 1)))
        cmd = CtbrCommand(thrust_norm=thrust, omega_des=omega_des)
        for _ in range(horizon):
            state, _ = integrate_step(state, cmd, CONTROL_DT, SUBSTEPS, P)
        # include velocity terms so one-step sensitivities are O(dt), keeping
        # the finite-difference oracle well conditioned at short horizons
        return ops.add(ops.sum_(ops.mul(state.p, state.p)),
                       ops.sum_(ops.mul(state.v, state.v)))

    @pytest.mark.parametrize("horizon", [1, 8, 32])
    def test_gradient_matches_fd(self, horizon):
        x0 = np.array([9.2, 0.25, -0.15, 0.1])
        tape = Tape()
        vx = tape.leaf(x0)
        loss = self._rollout_loss(vx, horizon)
        g = tape.backward(loss)[vx.index]

        fd = np.zeros(4)
        for i in range(4):
            h = 1e-6 * max(1.0, abs(x0[i]))
            xp, xm = x0.copy(), x0.copy()
            xp[i] += h
            xm[i] -= h
            fd[i] = (self._rollout_loss(xp, horizon) - self._rollout_loss(xm, horizon)) / (2 * h)

        rel = np.abs(g - fd) / np.maximum(np.maximum(np.abs(g), np.abs(fd)), 1e-10)
        assert float(np.max(rel)) <= 1e-4
