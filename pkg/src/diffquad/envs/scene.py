"""Task scenes: gates, obstacles, landing pads, and collision queries.

Segmentation ids: 0 background, 1 ground, 2 landing pad, 3+ gates then
obstacles in declaration order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..autodiff import ops
from ..render.geometry import Box, GroundPlane, PadTop, Sphere

SID_GROUND = 1
SID_PAD = 2
SID_FIRST_GATE = 3


@dataclass
class Gate:
    """Square gate: crossing plane with an inner aperture, framed by boxes."""

    center: np.ndarray
    yaw: float                 # normal direction = (cos yaw, sin yaw, 0)
    half_w: float = 0.5
    half_h: float = 0.5
    frame: float = 0.08        # frame bar thickness
    depth: float = 0.05        # frame bar depth along the normal
    sid: int = SID_FIRST_GATE

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.float64)

    @property
    def normal(self) -> np.ndarray:
        return np.array([np.cos(self.yaw), np.sin(self.yaw), 0.0])

    @property
    def u_axis(self) -> np.ndarray:
        # in-plane horizontal axis
        return np.array([-np.sin(self.yaw), np.cos(self.yaw), 0.0])

    def frame_boxes(self) -> list:
        u, w, h, f, d = self.u_axis, self.half_w, self.half_h, self.frame, self.depth
        z = np.array([0.0, 0.0, 1.0])
        bars = []
        for offset, half in (
            (+(w + f / 2) * u, (f / 2, h + f)),   # right post
            (-(w + f / 2) * u, (f / 2, h + f)),   # left post
            (+(h + f / 2) * z, (w + f, f / 2)),   # top bar
            (-(h + f / 2) * z, (w + f, f / 2)),   # bottom bar
        ):
            c = self.center + offset
            # half extents in the gate's local frame (u, normal, z)
            he = np.array([half[0], d / 2, half[1]])
            bars.append(Box(center=c, half_extents=he, yaw=self.yaw + np.pi / 2,
                            sid=self.sid))
        return bars

    def passed_through(self, p_prev, p_now) -> np.ndarray:
        """Segment crossing: correct direction and inside the aperture."""
        p_prev = np.atleast_2d(p_prev)
        p_now = np.atleast_2d(p_now)
        n = self.normal
        s_prev = (p_prev - self.center) @ n
        s_now = (p_now - self.center) @ n
        crossing = (s_prev < 0.0) & (s_now >= 0.0)
        denom = np.where(np.abs(s_now - s_prev) < 1e-12, 1.0, s_now - s_prev)
        frac = -s_prev / denom
        hit = p_prev + frac[..., None] * (p_now - p_prev)
        rel = hit - self.center
        inside = (np.abs(rel @ self.u_axis) <= self.half_w) & \
                 (np.abs(rel[..., 2]) <= self.half_h)
        return crossing & inside


def gate_pass_check(p_prev, p_now, gate: Gate) -> bool:
    return bool(gate.passed_through(p_prev, p_now)[0])


@dataclass
class Scene:
    """Primitives for one environment instance."""

    ground: GroundPlane = field(default_factory=lambda: GroundPlane(z=0.0, sid=SID_GROUND))
    pad: PadTop | None = None
    gates: list = field(default_factory=list)
    obstacles: list = field(default_factory=list)   # Spheres
    ground_is_hazard: bool = True

    def primitives(self) -> list:
        prims = [self.ground]
        if self.pad is not None:
            prims.append(self.pad)
        for g in self.gates:
            prims.extend(g.frame_boxes())
        prims.extend(self.obstacles)
        return prims

    def hazard_clearance(self, p: np.ndarray) -> np.ndarray:
        """Distance from points (B,3) to the nearest crash surface."""
        p = np.atleast_2d(p)
        dist = np.full(p.shape[0], np.inf)
        if self.ground_is_hazard:
            dist = np.minimum(dist, self.ground.distance(p))
        for gate in self.gates:
            for box in gate.frame_boxes():
                dist = np.minimum(dist, box.distance(p))
        for ob in self.obstacles:
            dist = np.minimum(dist, ob.distance(p))
        return dist

    def obstacle_clearance_and_approach(self, p, v):
        """(d_col, closing speed) to the nearest obstacle; differentiable.

        Distances run through the op layer so the avoidance reward carries
        gradients; the approach direction is evaluated at the primal point.
        """
        if not self.obstacles:
            batch = np.shape(ops.value(p))[0]
            return np.full(batch, np.inf), np.zeros(batch)
        centers = np.stack([ob.center for ob in self.obstacles])   # (K,3)
        radii = np.array([ob.radius for ob in self.obstacles])     # (K,)
        d_col = None
        p_val = np.asarray(ops.value(p))
        diff_val = centers[None] - p_val[:, None]                  # (B,K,3)
        d_val = np.linalg.norm(diff_val, axis=-1) - radii[None]
        nearest = np.argmin(d_val, axis=-1)                        # (B,)
        for k, ob in enumerate(self.obstacles):
            dk = ops.sub(ops.norm2(ops.sub(ob.center, p), axis=-1), ob.radius)
            d_col = dk if d_col is None else ops.minimum(d_col, dk)
        # unit direction to the nearest obstacle surface, held constant
        sel = np.take_along_axis(diff_val, nearest[:, None, None].repeat(3, -1),
                                 axis=1)[:, 0]
        norm = np.maximum(np.linalg.norm(sel, axis=-1, keepdims=True), 1e-9)
        u_hat = sel / norm
        v_c = ops.relu(ops.sum_(ops.mul(v, u_hat), axis=-1))
        return d_col, v_c


def default_gates(cfg) -> list:
    """Evenly spaced gates on a circle, facing the direction of travel."""
    gates = []
    for k in range(cfg.n_gates):
        angle = 2.0 * np.pi * k / cfg.n_gates
        center = np.array([cfg.track_radius * np.cos(angle),
                           cfg.track_radius * np.sin(angle), cfg.gate_height])
        gates.append(Gate(center=center, yaw=angle + np.pi / 2,
                          half_w=cfg.gate_half_w, half_h=cfg.gate_half_h,
                          sid=SID_FIRST_GATE + k))
    return gates


class SpawnError(RuntimeError):
    """No collision-free spawn found within the retry budget."""


def build_scene(cfg, rng: np.random.Generator) -> Scene:
    """Scene for one env per task rules and curriculum stage."""
    task = cfg.task
    scene = Scene()
    rand = cfg.randomization

    if task in ("landing", "visual_landing"):
        scene.ground_is_hazard = False

    if task == "visual_landing":
        size = float(rng.uniform(*rand.pad_size))
        shape = str(rng.choice(list(rand.pad_shapes)))
        scene.pad = PadTop(center=np.zeros(2), shape=shape, size=size, sid=SID_PAD)

    if task in ("racing", "racing_obstacles"):
        scene.gates = default_gates(cfg)
        if task == "racing_obstacles":
            for gate in scene.gates:
                gate.center = gate.center + rng.uniform(-1, 1, 3) * np.asarray(rand.gate_pos_half)
                gate.yaw += float(rng.uniform(-rand.gate_yaw_half, rand.gate_yaw_half))
            n_obst = int(cfg.stage_value("n_obstacles", cfg.n_obstacles))
            half = np.asarray(rand.obstacle_field_half)
            placed = 0
            attempts = 0
            sid = SID_FIRST_GATE + len(scene.gates)
            while placed < n_obst:
                attempts += 1
                if attempts > 100 * max(n_obst, 1):
                    raise SpawnError("could not place obstacles clear of the track")
                c = rng.uniform(-1, 1, 3) * half + np.array([0.0, 0.0, cfg.gate_height])
                r = float(rng.uniform(*rand.obstacle_radius))
                # keep gates and their immediate approach corridors clear
                if min(np.linalg.norm(c - g.center) for g in scene.gates) < r + 1.2:
                    continue
                scene.obstacles.append(Sphere(center=c, radius=r, sid=sid + placed))
                placed += 1
    return scene
