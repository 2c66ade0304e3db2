"""Sensor-noise models for depth images and IMU channels.

Depth noise operates where the physical sensors err: Gaussian perturbation
of the inverse depth (equivalently, disparity-domain randomization), salt
and pepper outliers, Poisson photon statistics, multiplicative speckle, and
a parameterized disparity-domain stand-in for stereo-sensor distortion
(Gaussian disparity error + quantization + dropout). IMU noise is white
noise plus a bias random walk on the body-rate channel.

Zero-magnitude configs are the identity and draw nothing from the RNG.
"""

from __future__ import annotations

import numpy as np

from .config import NoiseConfig


def apply_depth_noise(depth: np.ndarray, cfg: NoiseConfig, rng: np.random.Generator,
                      near: float, far: float) -> np.ndarray:
    if not cfg.any_image:
        return depth
    out = np.array(depth, dtype=np.float64)

    if cfg.inv_depth_sigma > 0:
        inv = 1.0 / np.maximum(out, near)
        inv = inv + rng.normal(0.0, cfg.inv_depth_sigma, size=out.shape)
        out = 1.0 / np.maximum(inv, 1.0 / far)

    if cfg.redwood_disp_sigma > 0 or cfg.redwood_disp_quant > 0 or cfg.redwood_dropout > 0:
        disp = 1.0 / np.maximum(out, near)
        if cfg.redwood_disp_sigma > 0:
            disp = disp + rng.normal(0.0, cfg.redwood_disp_sigma, size=out.shape)
        if cfg.redwood_disp_quant > 0:
            q = cfg.redwood_disp_quant
            disp = np.round(disp / q) * q
        out = 1.0 / np.maximum(disp, 1.0 / far)
        if cfg.redwood_dropout > 0:
            drop = rng.random(out.shape) < cfg.redwood_dropout
            out[drop] = far

    if cfg.poisson_scale > 0:
        out = rng.poisson(out * cfg.poisson_scale).astype(np.float64) / cfg.poisson_scale

    if cfg.speckle_sigma > 0:
        out = out * (1.0 + rng.normal(0.0, cfg.speckle_sigma, size=out.shape))

    if cfg.salt_pepper_prob > 0:
        u = rng.random(out.shape)
        out[u < cfg.salt_pepper_prob / 2.0] = near
        out[(u >= cfg.salt_pepper_prob / 2.0) & (u < cfg.salt_pepper_prob)] = far

    return np.clip(out, near, far)


class ImuNoise:
    """White noise plus bias random walk on the body-rate observation."""

    def __init__(self, cfg: NoiseConfig, num_envs: int, rng: np.random.Generator):
        self.cfg = cfg
        self.rng = rng
        self.bias = np.zeros((num_envs, 3))

    def reset_rows(self, rows) -> None:
        self.bias[rows] = 0.0

    def step(self) -> None:
        if self.cfg.gyro_bias_rw_sigma > 0:
            self.bias += self.rng.normal(0.0, self.cfg.gyro_bias_rw_sigma,
                                         size=self.bias.shape)

    def corrupt(self, omega: np.ndarray) -> np.ndarray:
        if not self.cfg.any_imu:
            return omega
        out = omega + self.bias
        if self.cfg.gyro_sigma > 0:
            out = out + self.rng.normal(0.0, self.cfg.gyro_sigma, size=omega.shape)
        return out
