"""Reward term catalog.

Each term maps a per-step TransitionContext to a per-env scalar. All dense
terms route through the op layer and therefore record on an active tape;
the two sparse event terms (goal, crash) are step functions of event flags
and are excluded from gradient-based training.

Weights are positive by convention; penalties carry their sign inside the
formula. No normalization is applied across terms.
"""

from __future__ import annotations

import numpy as np

from ..autodiff import ops

SPARSE_TERMS = frozenset({"goal", "crash"})


class RewardContextError(KeyError):
    """A term referenced a context field the environment did not supply."""


def _require(ctx, name, term):
    val = getattr(ctx, name, None)
    if val is None:
        raise RewardContextError(f"reward term {term!r} needs ctx.{name}")
    return val


def progress_reward(kind, ctx, weight):
    """Movement-toward-goal shaping; prog1 is signed (positive approaching)."""
    if kind == "prog1":
        d_prev = _require(ctx, "dist_prev", "prog1")
        d_now = _require(ctx, "dist", "prog1")
        return ops.mul(ops.sub(d_prev, d_now), weight)
    if kind == "prog2":
        return ops.mul(_require(ctx, "dist", "prog2"), -weight)
    pos = _require(ctx, "position", kind)
    goal = _require(ctx, "goal", kind)
    diff = ops.sub(pos, goal)
    if kind == "progxy":
        return ops.mul(ops.norm2(ops.cols(diff, 0, 2), axis=-1), -weight)
    axis = {"progx": 0, "progy": 1, "progz": 2}[kind]
    return ops.mul(ops.abs_(ops.col(diff, axis)), -weight)


def action_reward(u_t, u_prev, weight_u, weight_du):
    """Smoothness penalty on action magnitude and action change."""
    mag = ops.norm2(u_t, axis=-1)
    change = ops.norm2(ops.sub(u_t, u_prev), axis=-1)
    return ops.neg(ops.add(ops.mul(mag, weight_u), ops.mul(change, weight_du)))


def orientation_reward(kind, ctx, weight, cap=10.0):
    if kind == "ori1":
        psi = _require(ctx, "yaw_error", "ori1")
        return ops.mul(ops.exp(ops.neg(ops.abs_(psi))), weight)
    if kind == "ori2":
        q = _require(ctx, "attitude", "ori2")
        q_des = _require(ctx, "attitude_des", "ori2")
        return ops.mul(ops.norm2(ops.sub(q, q_des), axis=-1), -weight)
    if kind == "ori3":
        px = _require(ctx, "pixel", "ori3")  # (u, v, du, dv), each (B,)
        ssq = None
        for c in px:
            sq = ops.mul(c, c)
            ssq = sq if ssq is None else ops.add(ssq, sq)
        return ops.mul(ops.exp(ops.neg(ssq)), weight)
    if kind == "ori4":
        phi = _require(ctx, "roll_error", "ori4")
        gate_mask = np.asarray(ops.value(_require(ctx, "approaching_gap", "ori4")), dtype=bool)
        penalty = ops.neg(ops.minimum(ops.tan(ops.abs_(phi)), cap))
        return ops.where(gate_mask, penalty, np.zeros(gate_mask.shape))
    raise ValueError(f"unknown orientation kind {kind!r}")


def velocity_reward(kind, v, v_d, weight):
    speed = ops.norm2(v, axis=-1)
    if kind == "v1":
        return ops.mul(speed, -weight)
    if kind == "v2":
        return ops.mul(ops.sub(speed, v_d), -weight)
    if kind == "v3":
        return ops.mul(ops.add(ops.exp(ops.sub(speed, v_d)), 1.0), -weight)
    raise ValueError(f"unknown velocity kind {kind!r}")


def landing_vz_reward(v_z, height, alpha, v_min, v_max, weight):
    """Reward descent matching the height-adaptive profile v_h = clamp(a*h)."""
    v_h = ops.clamp(ops.mul(height, alpha), v_min, v_max)
    mismatch = ops.abs_(ops.add(v_h, v_z))
    return ops.div(weight, ops.add(mismatch, 1.0))


def anglev_reward(omega, weight):
    return ops.mul(ops.norm2(omega, axis=-1), -weight)


def avoid_reward(kind, d_col, v_c, r_q=0.15, b=0.1, weight=0.01,
                 barrier_weight=0.1, barrier_sharpness=10.0):
    """Obstacle-clearance shaping.

    avoid1 is the inverse-distance form, implemented as a penalty (it grows
    near obstacles). avoid2 pairs a truncated quadratic scaled by approach
    speed with a soft-plus barrier on clearance beyond the body radius.
    """
    if kind == "avoid1":
        return ops.neg(ops.div(weight, ops.add(d_col, b)))
    if kind == "avoid2":
        margin = ops.sub(d_col, r_q)
        quad = ops.maximum(ops.sub(1.0, margin), 0.0)
        near = ops.neg(ops.mul(v_c, ops.mul(quad, quad)))
        barrier = ops.mul(ops.softplus(ops.mul(margin, barrier_sharpness)), barrier_weight)
        return ops.add(near, barrier)
    raise ValueError(f"unknown avoid kind {kind!r}")


def sparse_reward(arrived, crashed, weight_goal, weight_crash):
    """Terminal-event bonus/penalty; both may fire on the same step."""
    arrived = np.asarray(ops.value(arrived), dtype=np.float64)
    crashed = np.asarray(ops.value(crashed), dtype=np.float64)
    return weight_goal * arrived - weight_crash * crashed
