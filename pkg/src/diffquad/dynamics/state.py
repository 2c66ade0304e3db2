"""Batched rigid-body state of the quadrotor fleet."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import ops
from .params import QuadParams
from .rotation import quat_identity


@dataclass
class QuadState:
    """Position/attitude/velocity/body-rate plus the four rotor speeds.

    Every field has a leading batch axis: p (B,3), q (B,4) w-first unit
    quaternion, v (B,3) world-frame velocity, w (B,3) body rates, rotor
    (B,4) rotor speeds. Fields may be numpy arrays or tape Vars.
    """

    p: object
    q: object
    v: object
    w: object
    rotor: object

    @property
    def batch(self) -> int:
        return np.shape(ops.value(self.p))[0]

    def detach(self) -> "QuadState":
        return QuadState(*(np.array(ops.value(f)) for f in
                           (self.p, self.q, self.v, self.w, self.rotor)))

    def copy_rows(self, other: "QuadState", rows) -> None:
        """Overwrite selected env rows in place (numpy-backed states only)."""
        for mine, theirs in ((self.p, other.p), (self.q, other.q), (self.v, other.v),
                             (self.w, other.w), (self.rotor, other.rotor)):
            mine[rows] = ops.value(theirs)[rows]

    @classmethod
    def hover(cls, batch: int, params: QuadParams, pos=None) -> "QuadState":
        """Rest state at `pos` with rotors pre-spun to hover speed."""
        p = np.zeros((batch, 3)) if pos is None else np.tile(np.asarray(pos, dtype=np.float64), (batch, 1))
        return cls(
            p=p,
            q=quat_identity(batch),
            v=np.zeros((batch, 3)),
            w=np.zeros((batch, 3)),
            rotor=np.full((batch, 4), params.hover_omega),
        )
