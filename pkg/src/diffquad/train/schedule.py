"""Learning-rate decay: log-linear from start to end over the run."""

from __future__ import annotations

import numpy as np


def lr_schedule(step: int, total: int, start: float, end: float) -> float:
    if not 0 <= step:
        raise ValueError("step must be non-negative")
    if total <= 0:
        return end
    frac = min(step / total, 1.0)
    return float(np.exp(np.log(start) + frac * (np.log(end) - np.log(start))))
