"""The six benchmark environments.

One TaskEnv steps a whole batch of independent env instances: state is
batched, per-env RNG streams derive from (global seed, env index), and all
state math goes through the op layer so the same step() serves plain
rollouts and tape-recorded differentiable rollouts.

Modes:
  evaluation/PPO: episodes terminate (crash, success, timeout); done rows
  must be reset before stepping again.
  differentiable (BPTT): nothing terminates mid-rollout; a crashed env has
  its state frozen and its reward masked from then on, keeping the tape
  well-defined over the full horizon.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import ops
from ..dynamics import CtbrCommand, QuadState, get_params, integrate_step
from ..dynamics.rotation import (quat_from_axis_angle, quat_identity, quat_yaw,
                                 wrap_angle)
from ..render import Camera, render_depth, render_segmentation
from ..rewards import TransitionContext
from .config import EnvConfig, VISION_TASKS
from .latency import LatencyBuffer
from .noise import ImuNoise, apply_depth_noise
from .scene import Scene, SpawnError, build_scene
from .trajectories import ReferenceTrajectory

PROPRIO_DIM = {"hover": 13, "landing": 13, "visual_landing": 13,
               "tracking": 40, "racing": 16, "racing_obstacles": 17}


@dataclass
class Observation:
    proprio: object                 # (B, n) array or Var
    image: np.ndarray | None = None  # (B, 64, 64) depth [m] or segmentation ids
    kind: str | None = None          # "depth" | "segmentation"


class TaskEnv:
    def __init__(self, cfg: EnvConfig, seed: int = 0, differentiable: bool = False,
                 env_index_offset: int = 0):
        self.cfg = cfg
        self.task = cfg.task
        self.params = get_params(cfg.quad)
        self.diff = differentiable
        self.num_envs = cfg.num_envs
        b = self.num_envs

        self.rngs = [np.random.default_rng(np.random.SeedSequence((seed, env_index_offset + i)))
                     for i in range(b)]
        self.noise_rng = np.random.default_rng(np.random.SeedSequence((seed, 10_000_019)))

        self.omega_range = np.asarray(cfg.omega_range, dtype=np.float64)
        hover_u0 = 2.0 * self.params.hover_thrust_norm / self.params.thrust_norm_max - 1.0
        self.hover_action = np.array([hover_u0, 0.0, 0.0, 0.0])

        self.trajectory = None
        if self.task == "tracking":
            self.trajectory = ReferenceTrajectory(cfg.traj_kind, cfg.traj_scale,
                                                  cfg.traj_height, cfg.traj_speed)

        self.state = QuadState.hover(b, self.params)
        # per-env scenes only where the randomization table varies them;
        # other tasks share one immutable scene across the batch
        self.shared_scene = self.task not in ("visual_landing", "racing_obstacles")
        if self.shared_scene:
            scene = build_scene(cfg, np.random.default_rng(0))
            self.scenes: list[Scene] = [scene] * b
        else:
            self.scenes = [Scene() for _ in range(b)]
        self.obstacle_centers = np.zeros((b, 0, 3))
        self.obstacle_radii = np.zeros((b, 0))

        self.step_count = np.zeros(b, dtype=np.int64)
        self.done = np.zeros(b, dtype=bool)
        self.frozen = np.zeros(b, dtype=bool)
        self.gate_idx = np.zeros(b, dtype=np.int64)
        self.action_prev = np.tile(self.hover_action, (b, 1))
        self.latency = LatencyBuffer(cfg.latency_frames, np.tile(self.hover_action, (b, 1)))
        self.imu_noise = ImuNoise(cfg.noise, b, self.noise_rng)

        self.reset()

    # ------------------------------------------------------------------ reset

    def _sample_initial_rows(self, rows):
        rand = self.cfg.randomization
        p_center = np.asarray(rand.p_center)
        p_half = np.asarray(rand.p_half)
        v_half = np.asarray(rand.v_half)
        for i in rows:
            rng = self.rngs[i]
            if not self.shared_scene:
                self.scenes[i] = build_scene(self.cfg, rng)
            for attempt in range(100):
                p = p_center + rng.uniform(-1.0, 1.0, 3) * p_half
                if self.scenes[i].hazard_clearance(p[None])[0] > self.cfg.collision_radius:
                    break
            else:
                raise SpawnError(f"env {i}: no collision-free spawn in 100 attempts")
            self.state.p[i] = p
            self.state.v[i] = rng.uniform(-1.0, 1.0, 3) * v_half
            if rand.yaw_half > 0 or rand.tilt_half > 0:
                yaw = rng.uniform(-rand.yaw_half, rand.yaw_half)
                tilt_ax = rng.normal(size=3)
                tilt_ax[2] = 0.0
                tilt_ax /= max(np.linalg.norm(tilt_ax), 1e-9)
                tilt = rng.uniform(-rand.tilt_half, rand.tilt_half)
                qz = quat_from_axis_angle(np.array([0.0, 0, 1]), yaw)
                qt = quat_from_axis_angle(tilt_ax, tilt)
                q = ops.quat_mul(qz[None], qt[None])[0]
                self.state.q[i] = q / np.linalg.norm(q)
            else:
                self.state.q[i] = quat_identity()
            self.state.w[i] = rng.uniform(-1.0, 1.0, 3) * rand.omega_half
            self.state.rotor[i] = self.params.hover_omega

    def _rebuild_obstacle_arrays(self):
        if self.task != "racing_obstacles":
            return
        counts = [len(s.obstacles) for s in self.scenes]
        k = max(counts) if counts else 0
        self.obstacle_centers = np.full((self.num_envs, k, 3), 1e6)
        self.obstacle_radii = np.zeros((self.num_envs, k))
        for i, scene in enumerate(self.scenes):
            for j, ob in enumerate(scene.obstacles):
                self.obstacle_centers[i, j] = ob.center
                self.obstacle_radii[i, j] = ob.radius

    def reset(self, rows=None) -> Observation:
        if not isinstance(self.state.p, np.ndarray):
            raise RuntimeError("detach() the env before resetting after a differentiable rollout")
        rows = np.arange(self.num_envs) if rows is None else np.atleast_1d(rows)
        self._sample_initial_rows(rows)
        self._rebuild_obstacle_arrays()
        self.step_count[rows] = 0
        self.done[rows] = False
        self.frozen[rows] = False
        self.gate_idx[rows] = 0
        self.action_prev[rows] = self.hover_action
        self.latency.reset_rows(rows)
        self.imu_noise.reset_rows(rows)
        return self.observe()

    def set_state_rows(self, other: QuadState, rows) -> None:
        """Overwrite selected rows (reservoir restarts); clears episode flags."""
        self.state.copy_rows(other, rows)
        self.step_count[rows] = 0
        self.done[rows] = False
        self.frozen[rows] = False
        self.gate_idx[rows] = 0
        self.action_prev[rows] = self.hover_action
        self.latency.reset_rows(rows)

    def detach(self) -> None:
        """Drop tape references after a differentiable rollout."""
        self.state = self.state.detach()
        self.action_prev = np.array(ops.value(self.action_prev))
        self.latency.detach()

    def finished_rows(self) -> np.ndarray:
        """Rows due for a reset between differentiable rollouts."""
        return np.flatnonzero(self.frozen | (self.step_count >= self.cfg.episode_len))

    # ------------------------------------------------------------------ goals

    def _current_goals(self) -> np.ndarray:
        b = self.num_envs
        if self.task in ("hover", "landing"):
            return np.tile(np.asarray(self.cfg.goal), (b, 1))
        if self.task == "visual_landing":
            return np.zeros((b, 3))
        if self.task == "tracking":
            t = self.step_count * self.cfg.control_dt
            return self.trajectory.position_at_time(t)
        # racing tasks: center of the gate currently being approached
        goals = np.zeros((b, 3))
        for i, scene in enumerate(self.scenes):
            gates = scene.gates
            gi = min(self.gate_idx[i], len(gates) - 1)
            goals[i] = gates[gi].center
        return goals

    def _next_goals(self) -> np.ndarray:
        goals = np.zeros((self.num_envs, 3))
        for i, scene in enumerate(self.scenes):
            gates = scene.gates
            gi = min(self.gate_idx[i] + 1, len(gates) - 1)
            goals[i] = gates[gi % len(gates)].center
        return goals

    # ------------------------------------------------------------------ action

    def denormalize_action(self, u) -> CtbrCommand:
        """[-1,1]^4 -> mass-normalized thrust and body-rate setpoints."""
        thrust = ops.mul(ops.add(ops.col(u, 0), 1.0), 0.5 * self.params.thrust_norm_max)
        omega_des = ops.mul(ops.cols(u, 1, 4), self.omega_range)
        return CtbrCommand(thrust_norm=thrust, omega_des=omega_des)

    # ------------------------------------------------------------------ step

    def step(self, action):
        """Apply one control step. Returns (obs, ctx, done, info)."""
        if not self.diff and np.any(self.done):
            raise RuntimeError("stepped a terminated env; reset done rows first")

        raw = np.asarray(ops.value(action))
        clipped = np.any(np.abs(raw) > 1.0 + 1e-9, axis=-1)
        action = ops.clamp(action, -1.0, 1.0)

        alive = ~self.frozen  # reward mask: crashes zero rewards *thereafter*
        applied = self.latency.push(action)
        cmd = self.denormalize_action(applied)

        prev_state = self.state
        prev_p_np = np.array(ops.value(prev_state.p))
        new_state, stepinfo = integrate_step(prev_state, cmd, self.cfg.control_dt,
                                             self.cfg.substeps, self.params)
        if self.diff and self.frozen.any():
            mask = self.frozen[:, None]
            new_state = QuadState(
                p=ops.where(mask, prev_state.p, new_state.p),
                q=ops.where(mask, prev_state.q, new_state.q),
                v=ops.where(mask, prev_state.v, new_state.v),
                w=ops.where(mask, prev_state.w, new_state.w),
                rotor=ops.where(mask, prev_state.rotor, new_state.rotor),
            )

        p_np = np.asarray(ops.value(new_state.p))
        v_np = np.asarray(ops.value(new_state.v))
        goals = self._current_goals()

        events = self._detect_events(prev_p_np, p_np, v_np, goals)
        ctx = self._build_context(prev_state, new_state, action, goals, events)

        # bookkeeping after context assembly so rewards see pre-advance goals
        self.state = new_state
        self.action_prev = action
        self.step_count = self.step_count + (~self.done).astype(np.int64)
        self.gate_idx += events["gate_passed"].astype(np.int64)

        timeout = self.step_count >= self.cfg.episode_len
        if self.diff:
            self.frozen |= events["crashed"]
            done = np.zeros(self.num_envs, dtype=bool)
        else:
            done = events["crashed"] | events["terminal_success"] | timeout
            self.done = done.copy()

        info = {
            "dist": np.linalg.norm(p_np - goals, axis=-1),
            "xy_err": np.linalg.norm((p_np - goals)[:, :2], axis=-1),
            "speed": np.linalg.norm(v_np, axis=-1),
            "arrived": events["arrived"],
            "crashed": events["crashed"],
            "success": events["terminal_success"],
            "gate_passed": events["gate_passed"],
            "gates_cleared": self.gate_idx.copy(),
            "truncated": timeout & ~events["crashed"] & ~events["terminal_success"],
            "alive_mask": alive.astype(np.float64),
            "applied_action": np.array(ops.value(applied)),
            "clipped": clipped,
            "rotor_saturated": stepinfo.rotor_saturated,
        }
        return self.observe(), ctx, done, info

    # ------------------------------------------------------------------ events

    def _detect_events(self, prev_p, p, v, goals):
        b = self.num_envs
        speed = np.linalg.norm(v, axis=-1)
        oob = (np.abs(p[:, 0]) > self.cfg.bounds_xy) | \
              (np.abs(p[:, 1]) > self.cfg.bounds_xy) | \
              (p[:, 2] > self.cfg.bounds_z) | (p[:, 2] < -0.5)

        if self.shared_scene:
            clearance = self.scenes[0].hazard_clearance(p)
        else:
            clearance = np.array([self.scenes[i].hazard_clearance(p[i][None])[0]
                                  for i in range(b)])
        collided = clearance < self.cfg.collision_radius

        arrived = np.zeros(b, dtype=bool)
        terminal_success = np.zeros(b, dtype=bool)
        gate_passed = np.zeros(b, dtype=bool)
        crashed = oob | collided

        if self.task in ("hover", "tracking"):
            dist = np.linalg.norm(p - goals, axis=-1)
            arrived = (dist < self.cfg.arrive_dist) & (speed < self.cfg.arrive_speed)
        elif self.task in ("landing", "visual_landing"):
            touch = p[:, 2] <= self.cfg.touch_z
            z_ok = np.abs(p[:, 2]) < self.cfg.land_z_tol
            xy_ok = np.linalg.norm((p - goals)[:, :2], axis=-1) < self.cfg.land_xy_tol
            gentle = speed < self.cfg.land_speed_tol
            landed_ok = touch & z_ok & xy_ok & gentle
            arrived = landed_ok
            if self.diff:
                # descent through the pad plane is allowed during training
                crashed = oob
            else:
                terminal_success = landed_ok
                crashed = crashed | (touch & ~landed_ok)
        elif self.task in ("racing", "racing_obstacles"):
            for i, scene in enumerate(self.scenes):
                gates = scene.gates
                gi = self.gate_idx[i]
                if gi < len(gates):
                    gate_passed[i] = gates[gi].passed_through(prev_p[i], p[i])[0]
            arrived = gate_passed
            lap_done = (self.gate_idx + gate_passed.astype(np.int64)) >= \
                np.array([len(s.gates) for s in self.scenes])
            terminal_success = lap_done

        return {"arrived": arrived, "crashed": crashed, "gate_passed": gate_passed,
                "terminal_success": terminal_success, "clearance": clearance}

    # ------------------------------------------------------------------ context

    def _build_context(self, prev_state, state, action, goals, events) -> TransitionContext:
        dist = ops.norm2(ops.sub(state.p, goals), axis=-1)
        dist_prev = ops.norm2(ops.sub(prev_state.p, goals), axis=-1)
        ctx = TransitionContext(
            position=state.p, velocity=state.v, omega=state.w, attitude=state.q,
            attitude_des=quat_identity(self.num_envs),
            action=action, action_prev=self.action_prev,
            goal=goals, dist=dist, dist_prev=dist_prev,
            height=ops.relu(ops.col(state.p, 2)),
            v_z=ops.col(state.v, 2),
            arrived=events["arrived"], crashed=events["crashed"],
        )
        if self.task == "racing_obstacles":
            ctx.obstacle_dist, ctx.approach_speed = self._obstacle_terms(state)
            to_goal = ops.sub(goals, state.p)
            bearing = ops.atan2(ops.col(to_goal, 1), ops.col(to_goal, 0))
            ctx.yaw_error = wrap_angle(ops.sub(quat_yaw(state.q), bearing))
        return ctx

    def _obstacle_terms(self, state):
        k = self.obstacle_radii.shape[1]
        if k == 0:
            b = self.num_envs
            return np.full(b, np.inf), np.zeros(b)
        p3 = ops.reshape(state.p, (self.num_envs, 1, 3))
        d_all = ops.sub(ops.norm2(ops.sub(p3, self.obstacle_centers), axis=-1),
                        self.obstacle_radii)  # (B, K)
        d_col = ops.col(d_all, 0)
        for j in range(1, k):
            d_col = ops.minimum(d_col, ops.col(d_all, j))
        p_val = np.asarray(ops.value(state.p))
        diff = self.obstacle_centers - p_val[:, None]
        nearest = np.argmin(np.asarray(ops.value(d_all)), axis=-1)
        sel = diff[np.arange(self.num_envs), nearest]
        u_hat = sel / np.maximum(np.linalg.norm(sel, axis=-1, keepdims=True), 1e-9)
        v_c = ops.relu(ops.sum_(ops.mul(state.v, u_hat), axis=-1))
        return d_col, v_c

    # ------------------------------------------------------------------ observe

    def observe(self) -> Observation:
        state = self.state
        b = self.num_envs
        w_np = np.asarray(ops.value(state.w))
        self.imu_noise.step()
        w_noisy = self.imu_noise.corrupt(w_np)
        omega_obs = state.w if np.array_equal(w_noisy, w_np) else \
            ops.add(state.w, w_noisy - w_np)

        if self.task in ("hover", "landing"):
            rel = ops.sub(self._current_goals(), state.p)
            proprio = ops.concat([rel, state.v, state.q, omega_obs], axis=-1)
            return Observation(proprio=proprio)

        if self.task == "visual_landing":
            proprio = ops.concat([state.p, state.v, state.q, omega_obs], axis=-1)
            return Observation(proprio=proprio, image=self._render(), kind="segmentation")

        if self.task == "tracking":
            t = self.step_count * self.cfg.control_dt
            wp = self.trajectory.waypoints(t, self.cfg.traj_points, self.cfg.control_dt)
            wp_flat = wp.reshape(b, 3 * self.cfg.traj_points)
            p_tiled = ops.concat([state.p] * self.cfg.traj_points, axis=-1)
            rel = ops.sub(wp_flat, p_tiled)
            proprio = ops.concat([rel, state.v, state.q, omega_obs], axis=-1)
            return Observation(proprio=proprio)

        rel1 = ops.sub(self._current_goals(), state.p)
        rel2 = ops.sub(self._next_goals(), state.p)
        if self.task == "racing":
            proprio = ops.concat([rel1, rel2, state.v, state.q, omega_obs], axis=-1)
            return Observation(proprio=proprio)

        # racing_obstacles: adds the reference speed scalar and a depth image
        v_d = np.full((b, 1), float(self.cfg.stage_value("traj_speed", self.cfg.traj_speed)))
        proprio = ops.concat([rel1, rel2, state.v, v_d, state.q, omega_obs], axis=-1)
        return Observation(proprio=proprio, image=self._render(), kind="depth")

    def _render(self) -> np.ndarray:
        mount = "down" if self.task == "visual_landing" else "forward"
        p = np.asarray(ops.value(self.state.p))
        q = np.asarray(ops.value(self.state.q))
        images = np.zeros((self.num_envs, 64, 64))
        for i in range(self.num_envs):
            cam = Camera.from_quad(p[i], q[i], mount, fov_deg=self.cfg.camera_fov,
                                   near=self.cfg.camera_near, far=self.cfg.camera_far)
            prims = self.scenes[i].primitives()
            if self.task == "visual_landing":
                images[i] = render_segmentation(cam, prims)
            else:
                depth = render_depth(cam, prims)
                images[i] = apply_depth_noise(depth, self.cfg.noise, self.noise_rng,
                                              self.cfg.camera_near, self.cfg.camera_far)
        return images
