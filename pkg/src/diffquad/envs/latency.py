"""Command-path latency as an integer action-frame FIFO.

The action applied at step t is the one commanded at step t - d; the first
d steps apply the hover-hold action the buffer was pre-filled with.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from ..autodiff import ops


class LatencyBuffer:
    def __init__(self, delay_frames: int, hold_action: np.ndarray):
        if delay_frames < 0:
            raise ValueError("delay must be >= 0")
        self.delay = delay_frames
        self.hold = np.array(hold_action, dtype=np.float64)
        self.queue = deque(np.array(self.hold) for _ in range(delay_frames))

    def push(self, action):
        """Insert the newest command, return the delayed one to apply."""
        if self.delay == 0:
            return action
        self.queue.append(action)
        return self.queue.popleft()

    def reset_rows(self, rows) -> None:
        """Refill the pipeline with the hold action for the given env rows."""
        for i, entry in enumerate(self.queue):
            if isinstance(entry, np.ndarray):
                entry[rows] = self.hold[rows]
            else:  # tape Var entries only exist mid-rollout; detach first
                raise RuntimeError("cannot reset latency rows while buffer holds tape values")

    def detach(self) -> None:
        self.queue = deque(np.array(ops.value(e)) for e in self.queue)
