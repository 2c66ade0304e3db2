"""Ring buffer of visited states used to diversify rollout starts."""

from __future__ import annotations

import numpy as np

from ..dynamics import QuadState


class StateReservoir:
    """Fixed-capacity FIFO of flattened quad states (17 floats each)."""

    WIDTH = 17  # p3 + q4 + v3 + w3 + rotor4

    def __init__(self, capacity: int = 100_000):
        self.capacity = capacity
        self.buffer = np.zeros((capacity, self.WIDTH))
        self.size = 0
        self.head = 0

    def __len__(self):
        return self.size

    def push_states(self, state: QuadState, rows=None) -> None:
        rows = np.arange(state.batch) if rows is None else np.atleast_1d(rows)
        if rows.size == 0:
            return
        flat = np.concatenate([state.p[rows], state.q[rows], state.v[rows],
                               state.w[rows], state.rotor[rows]], axis=-1)
        for row in flat:
            self.buffer[self.head] = row
            self.head = (self.head + 1) % self.capacity
            self.size = min(self.size + 1, self.capacity)

    def sample(self, n: int, rng: np.random.Generator) -> QuadState:
        if self.size == 0:
            raise ValueError("cannot sample from an empty reservoir")
        idx = rng.integers(0, self.size, size=n)
        flat = self.buffer[idx]
        return QuadState(p=flat[:, 0:3].copy(), q=flat[:, 3:7].copy(),
                         v=flat[:, 7:10].copy(), w=flat[:, 10:13].copy(),
                         rotor=flat[:, 13:17].copy())
