"""Analytic primitives shared by the raycaster and collision queries.

Each primitive supports ray intersection (vectorized over rays) and a
Euclidean clearance query from a point. Boxes allow a yaw rotation so gate
frames can face any heading; everything else is axis-aligned.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

INF = np.inf


def _yaw_matrix(yaw: float) -> np.ndarray:
    c, s = np.cos(yaw), np.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass
class Sphere:
    center: np.ndarray
    radius: float
    sid: int = 0  # segmentation id

    def intersect(self, origin, dirs):
        """Smallest positive ray parameter per ray; inf where missed."""
        oc = origin - self.center
        b = dirs @ oc
        c = float(oc @ oc) - self.radius ** 2
        disc = b * b - c
        hit = disc >= 0.0
        sq = np.sqrt(np.where(hit, disc, 0.0))
        t = -b - sq
        t_far = -b + sq
        # camera inside the sphere sees the far wall
        t = np.where(t > 0.0, t, t_far)
        return np.where(hit & (t > 0.0), t, INF)

    def distance(self, points):
        return np.maximum(np.linalg.norm(points - self.center, axis=-1) - self.radius, 0.0)


@dataclass
class Box:
    center: np.ndarray
    half_extents: np.ndarray
    yaw: float = 0.0
    sid: int = 0
    _rot: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.float64)
        self.half_extents = np.asarray(self.half_extents, dtype=np.float64)
        self._rot = _yaw_matrix(self.yaw)

    def intersect(self, origin, dirs):
        o = (origin - self.center) @ self._rot  # world->box frame
        d = dirs @ self._rot
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / d
            t1 = (-self.half_extents - o) * inv
            t2 = (self.half_extents - o) * inv
        tmin = np.nanmax(np.minimum(t1, t2), axis=-1)
        tmax = np.nanmin(np.maximum(t1, t2), axis=-1)
        hit = (tmax >= tmin) & (tmin > 0.0)
        return np.where(hit, tmin, INF)

    def distance(self, points):
        local = (points - self.center) @ self._rot
        outside = np.maximum(np.abs(local) - self.half_extents, 0.0)
        return np.linalg.norm(outside, axis=-1)


@dataclass
class GroundPlane:
    z: float = 0.0
    sid: int = 0

    def intersect(self, origin, dirs):
        dz = dirs[..., 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (self.z - origin[2]) / dz
        return np.where((np.abs(dz) > 1e-12) & (t > 0.0), t, INF)

    def distance(self, points):
        return np.maximum(points[..., 2] - self.z, 0.0)


@dataclass
class PadTop:
    """Top face of the landing platform: circle, square, or triangle footprint.

    The platform body is a 20 cm tall prism; a downward camera only ever
    sees the top face, so only that face is rendered.
    """

    center: np.ndarray  # (x, y) on the ground
    shape: str          # circle | square | triangle
    size: float         # footprint half-size / circumradius [m]
    height: float = 0.2
    sid: int = 0

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.float64)
        if self.shape not in ("circle", "square", "triangle"):
            raise ValueError(f"unknown pad shape {self.shape!r}")

    def _inside(self, xy):
        rel = xy - self.center
        if self.shape == "circle":
            return np.sum(rel * rel, axis=-1) <= self.size ** 2
        if self.shape == "square":
            return np.all(np.abs(rel) <= self.size, axis=-1)
        # equilateral triangle, circumradius = size, one vertex on +x
        inside = np.ones(rel.shape[:-1], dtype=bool)
        for k in range(3):
            ang = 2.0 * np.pi * k / 3.0 + np.pi / 3.0
            n = np.array([np.cos(ang), np.sin(ang)])
            inside &= rel @ n <= self.size * 0.5
        return inside

    def intersect(self, origin, dirs):
        dz = dirs[..., 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (self.height - origin[2]) / dz
        valid = (np.abs(dz) > 1e-12) & (t > 0.0)
        pts = origin[:2] + np.where(valid[..., None], t[..., None], 0.0) * dirs[..., :2]
        return np.where(valid & self._inside(pts), t, INF)

    def distance(self, points):
        # clearance to the prism, treated as a bounding box of its footprint
        box = Box(center=np.array([*self.center, self.height / 2.0]),
                  half_extents=np.array([self.size, self.size, self.height / 2.0]))
        return box.distance(points)
