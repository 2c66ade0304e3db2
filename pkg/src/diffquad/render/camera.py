"""Pinhole camera: pose from the quadrotor body plus a fixed mount."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dynamics.rotation import quat_rotate

# camera frame: +z optical axis, +x image right, +y image down.
# forward mount: optical axis along body +x; down mount: along body -z.
MOUNTS = {
    "forward": np.array([[0.0, 0.0, 1.0],
                         [-1.0, 0.0, 0.0],
                         [0.0, -1.0, 0.0]]),
    "down": np.array([[0.0, -1.0, 0.0],
                      [-1.0, 0.0, 0.0],
                      [0.0, 0.0, -1.0]]),
}


@dataclass
class Camera:
    position: np.ndarray          # world position of the optical center
    rotation: np.ndarray          # (3,3) world-from-camera
    fov_deg: float = 90.0
    width: int = 64
    height: int = 64
    near: float = 0.05
    far: float = 10.0

    def __post_init__(self):
        if not (0.0 < self.near < self.far):
            raise ValueError("camera requires 0 < near < far")
        if not (0.0 < self.fov_deg < 180.0):
            raise ValueError("fov must lie in (0, 180) degrees")
        self.position = np.asarray(self.position, dtype=np.float64)
        self.rotation = np.asarray(self.rotation, dtype=np.float64)

    @property
    def tan_half_fov(self) -> float:
        return float(np.tan(np.radians(self.fov_deg) / 2.0))

    @classmethod
    def from_quad(cls, position, quat, mount="forward", **kw) -> "Camera":
        body_from_cam = MOUNTS[mount]
        # rotate the camera basis vectors into the world frame
        world_cols = quat_rotate(np.tile(quat, (3, 1)), body_from_cam.T)
        return cls(position=np.asarray(position, dtype=np.float64),
                   rotation=np.asarray(world_cols).T, **kw)

    def rays(self):
        """Unit ray directions (H, W, 3) in world coordinates, pixel centers."""
        j = (np.arange(self.width) + 0.5) / self.width * 2.0 - 1.0
        i = (np.arange(self.height) + 0.5) / self.height * 2.0 - 1.0
        xs, ys = np.meshgrid(j, i)
        t = self.tan_half_fov
        dirs_cam = np.stack([xs * t, ys * t, np.ones_like(xs)], axis=-1)
        dirs_cam /= np.linalg.norm(dirs_cam, axis=-1, keepdims=True)
        return dirs_cam @ self.rotation.T

    def project_point(self, p_world, v_rel_world=None):
        """Pinhole projection to normalized [-1, 1] image coordinates.

        Returns (u, v, du, dv), or None when the point sits behind the near
        plane. Pixel velocity comes from the chain rule applied to the
        relative world velocity (zero if not given).
        """
        rel = self.rotation.T @ (np.asarray(p_world, dtype=np.float64) - self.position)
        x, y, z = rel
        if z < self.near:
            return None
        t = self.tan_half_fov
        u = x / (z * t)
        v = y / (z * t)
        if v_rel_world is None:
            return u, v, 0.0, 0.0
        vx, vy, vz = self.rotation.T @ np.asarray(v_rel_world, dtype=np.float64)
        du = (vx * z - x * vz) / (z * z * t)
        dv = (vy * z - y * vz) / (z * z * t)
        return u, v, du, dv
