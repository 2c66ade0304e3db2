"""Arc-length parameterized reference trajectories for the tracking task."""

from __future__ import annotations

import numpy as np


class ReferenceTrajectory:
    """Closed planar curve traversed at constant speed.

    Positions are queried by arc length, so waypoints are spaced uniformly
    in distance regardless of the curve's parameterization. The lemniscate
    uses a dense lookup of arc length vs parameter; the circle is exact.
    """

    def __init__(self, kind: str, scale: float, height: float, speed: float,
                 center=(0.0, 0.0), lut_size: int = 32768):
        if speed <= 0:
            raise ValueError("trajectory speed must be positive")
        if kind not in ("circle", "lemniscate"):
            raise ValueError(f"unknown trajectory kind {kind!r}")
        self.kind = kind
        self.scale = float(scale)
        self.height = float(height)
        self.speed = float(speed)
        self.center = np.asarray(center, dtype=np.float64)

        if kind == "circle":
            self.total_arc = 2.0 * np.pi * self.scale
        else:
            t = np.linspace(0.0, 2.0 * np.pi, lut_size + 1)
            pts = self._lemniscate_xy(t)
            seg = np.linalg.norm(np.diff(pts, axis=0), axis=-1)
            s = np.concatenate([[0.0], np.cumsum(seg)])
            self.total_arc = float(s[-1])
            self._lut_s = s
            self._lut_t = t

    @property
    def period(self) -> float:
        """Time to traverse the full curve at the configured speed [s]."""
        return self.total_arc / self.speed

    def _lemniscate_xy(self, t):
        # Bernoulli lemniscate, a figure-eight with loops along +-x
        denom = 1.0 + np.sin(t) ** 2
        x = self.scale * np.cos(t) / denom
        y = self.scale * np.sin(t) * np.cos(t) / denom
        return np.stack([x, y], axis=-1)

    def position_at_arc(self, s):
        """World positions for arc-length positions s (broadcasts)."""
        s = np.mod(np.asarray(s, dtype=np.float64), self.total_arc)
        if self.kind == "circle":
            theta = s / self.scale
            xy = self.scale * np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        else:
            t = np.interp(s, self._lut_s, self._lut_t)
            xy = self._lemniscate_xy(t)
        z = np.full(xy.shape[:-1] + (1,), self.height)
        return np.concatenate([xy + self.center, z], axis=-1)

    def position_at_time(self, t_seconds):
        return self.position_at_arc(np.asarray(t_seconds) * self.speed)

    def waypoints(self, t_seconds, count: int, dt: float):
        """The next `count` reference points after time t, dt apart.

        Returns (..., count, 3); entry k is the reference at t + (k+1) dt.
        """
        t = np.asarray(t_seconds, dtype=np.float64)
        offsets = (np.arange(count) + 1.0) * dt
        times = t[..., None] + offsets
        return self.position_at_time(times)
