from .camera import Camera, MOUNTS
from .geometry import Box, GroundPlane, PadTop, Sphere
from .raycast import raycast, render_depth, render_segmentation, write_pgm

__all__ = ["Camera", "MOUNTS", "Box", "GroundPlane", "PadTop", "Sphere",
           "raycast", "render_depth", "render_segmentation", "write_pgm"]
