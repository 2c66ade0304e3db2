"""Declarative reward composition.

A RewardSpec is an ordered list of weighted catalog terms; compose()
evaluates them against a TransitionContext and returns the total plus a
per-term breakdown for logging/ablation. Specs used for gradient-based
training must not contain sparse terms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..autodiff import ops
from . import terms as T


@dataclass
class TransitionContext:
    """Everything one simulation step exposes to the reward terms.

    Array fields are batched over envs and may be tape Vars during
    differentiable rollouts. Fields left None simply make the terms that
    need them unavailable.
    """

    position: object = None         # (B, 3) current position
    velocity: object = None         # (B, 3)
    omega: object = None            # (B, 3) body rates
    attitude: object = None         # (B, 4) current quaternion
    attitude_des: object = None     # (B, 4) desired quaternion
    action: object = None           # (B, 4) normalized action u_t
    action_prev: object = None      # (B, 4)
    goal: object = None             # (B, 3) current goal position
    dist: object = None             # (B,) distance to goal now
    dist_prev: object = None        # (B,) previous-position distance to the same goal
    height: object = None           # (B,) height above ground/pad
    v_z: object = None              # (B,) vertical velocity
    obstacle_dist: object = None    # (B,) clearance to nearest obstacle
    approach_speed: object = None   # (B,) closing speed toward nearest obstacle
    yaw_error: object = None        # (B,) relative yaw to target
    roll_error: object = None       # (B,) relative roll to gap
    pixel: object = None            # tuple (u, v, du, dv) of (B,)
    arrived: object = None          # (B,) bool event flags
    crashed: object = None          # (B,) bool
    approaching_gap: object = None  # (B,) bool


@dataclass(frozen=True)
class RewardTerm:
    term: str
    weight: float = 1.0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.weight < 0:
            raise ValueError(f"term {self.term!r}: weights are positive by convention")

    @property
    def sparse(self) -> bool:
        return self.term in T.SPARSE_TERMS


_PROGRESS = {"prog1", "prog2", "progxy", "progx", "progy", "progz"}
_ORIENT = {"ori1", "ori2", "ori3", "ori4"}
_VELOCITY = {"v1", "v2", "v3"}
_KNOWN = _PROGRESS | _ORIENT | _VELOCITY | {"act", "vz", "anglev", "avoid1", "avoid2",
                                            "goal", "crash"}


@dataclass
class RewardSpec:
    """Ordered weighted composition of catalog terms for one task."""

    terms: list

    def __post_init__(self):
        for t in self.terms:
            if t.term not in _KNOWN:
                raise ValueError(f"unknown reward term {t.term!r}")

    @property
    def has_sparse(self) -> bool:
        return any(t.sparse for t in self.terms)

    def validate_for_bptt(self):
        sparse = [t.term for t in self.terms if t.sparse]
        if sparse:
            raise ValueError(f"BPTT reward spec cannot contain sparse terms: {sparse}")

    def without(self, term_id: str) -> "RewardSpec":
        """Ablation helper: drop every term in the given family.

        Family prefixes match the ablation tags (e.g. 'prog' removes prog1,
        progxy, ...; 'sparse' removes goal and crash).
        """
        if term_id == "sparse":
            keep = [t for t in self.terms if not t.sparse]
        else:
            keep = [t for t in self.terms if not t.term.startswith(term_id)]
        if len(keep) == len(self.terms):
            raise ValueError(f"no term matching {term_id!r} in spec")
        return RewardSpec(keep)

    def to_config(self) -> list:
        return [{"term": t.term, "weight": t.weight, **t.params} for t in self.terms]

    @classmethod
    def from_config(cls, entries) -> "RewardSpec":
        out = []
        for e in entries:
            e = dict(e)
            out.append(RewardTerm(term=e.pop("term"), weight=float(e.pop("weight", 1.0)),
                                  params=e))
        return cls(out)


def _evaluate(term: RewardTerm, ctx: TransitionContext):
    tid, w, p = term.term, term.weight, term.params
    if tid in _PROGRESS:
        return T.progress_reward(tid, ctx, w)
    if tid == "act":
        u = ctx.action
        u_prev = ctx.action_prev
        if u is None or u_prev is None:
            raise T.RewardContextError("reward term 'act' needs ctx.action and ctx.action_prev")
        return T.action_reward(u, u_prev, w, p.get("weight_du", 0.0))
    if tid in _ORIENT:
        return T.orientation_reward(tid, ctx, w, cap=p.get("cap", 10.0))
    if tid in _VELOCITY:
        if ctx.velocity is None:
            raise T.RewardContextError(f"reward term {tid!r} needs ctx.velocity")
        return T.velocity_reward(tid, ctx.velocity, p.get("v_d", 0.0), w)
    if tid == "vz":
        if ctx.v_z is None or ctx.height is None:
            raise T.RewardContextError("reward term 'vz' needs ctx.v_z and ctx.height")
        return T.landing_vz_reward(ctx.v_z, ctx.height, p.get("alpha", 0.3),
                                   p.get("v_min", 0.1), p.get("v_max", 1.0), w)
    if tid == "anglev":
        if ctx.omega is None:
            raise T.RewardContextError("reward term 'anglev' needs ctx.omega")
        return T.anglev_reward(ctx.omega, w)
    if tid in ("avoid1", "avoid2"):
        if ctx.obstacle_dist is None:
            raise T.RewardContextError(f"reward term {tid!r} needs ctx.obstacle_dist")
        return T.avoid_reward(tid, ctx.obstacle_dist, ctx.approach_speed,
                              r_q=p.get("r_q", 0.15), b=p.get("b", 0.1), weight=w,
                              barrier_weight=p.get("barrier_weight", 0.1),
                              barrier_sharpness=p.get("barrier_sharpness", 10.0))
    if tid == "goal":
        if ctx.arrived is None:
            raise T.RewardContextError("reward term 'goal' needs ctx.arrived")
        return w * np.asarray(ops.value(ctx.arrived), dtype=np.float64)
    if tid == "crash":
        if ctx.crashed is None:
            raise T.RewardContextError("reward term 'crash' needs ctx.crashed")
        return -w * np.asarray(ops.value(ctx.crashed), dtype=np.float64)
    raise ValueError(f"unknown reward term {tid!r}")


def compose(spec: RewardSpec, ctx: TransitionContext):
    """Total reward and per-term breakdown.

    The total is a tape Var whenever any dense input is; breakdown entries
    are detached primal arrays, summing exactly to the detached total.
    """
    total = None
    breakdown = {}
    for term in spec.terms:
        val = _evaluate(term, ctx)
        breakdown[term.term] = np.array(ops.value(val), dtype=np.float64, copy=True)
        total = val if total is None else ops.add(total, val)
    if total is None:
        total = np.zeros(np.shape(ops.value(ctx.position))[0]
                         if ctx.position is not None else 0)
        breakdown = {}
    return total, breakdown
