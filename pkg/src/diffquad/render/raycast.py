"""Depth and segmentation rendering by closed-form ray casting.

Rendering is pure and deterministic: the nearest analytic intersection per
pixel, with the far-clip distance standing in for "no return". Images are
never differentiated; policies treat them as per-step constants.
"""

from __future__ import annotations

import numpy as np

from .camera import Camera


def raycast(camera: Camera, primitives):
    """(depth, ids): nearest hit distance along each ray and primitive id.

    Hits closer than the near plane are ignored; misses render at the far
    clip with id 0.
    """
    dirs = camera.rays()
    flat = dirs.reshape(-1, 3)
    depth = np.full(flat.shape[0], camera.far)
    ids = np.zeros(flat.shape[0], dtype=np.int32)
    for prim in primitives:
        t = prim.intersect(camera.position, flat)
        closer = (t >= camera.near) & (t < depth)
        depth[closer] = t[closer]
        ids[closer] = prim.sid
    shape = (camera.height, camera.width)
    return depth.reshape(shape), ids.reshape(shape)


def render_depth(camera: Camera, primitives) -> np.ndarray:
    depth, _ = raycast(camera, primitives)
    return depth


def render_segmentation(camera: Camera, primitives) -> np.ndarray:
    _, ids = raycast(camera, primitives)
    return ids


def write_pgm(depth: np.ndarray, path, far: float) -> None:
    """Dump a depth map as a binary 16-bit PGM scaled to [0, far]."""
    scaled = np.clip(depth / far, 0.0, 1.0)
    pixels = (scaled * 65535.0).astype(">u2")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{depth.shape[1]} {depth.shape[0]}\n65535\n".encode())
        fh.write(pixels.tobytes())
