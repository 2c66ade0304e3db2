"""Stage scheduling for curriculum training.

Stages advance when the windowed success rate clears the threshold; they
never regress. The environment re-reads stage overrides at reset, so an
advance takes effect on the next episode.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from .config import CurriculumSchedule


def curriculum_advance(success_window, stage: int, schedule: CurriculumSchedule) -> int:
    """Next stage index given recent per-episode success flags."""
    if not schedule.stages or stage >= len(schedule.stages) - 1:
        return stage
    window = list(success_window)
    if len(window) < schedule.window:
        return stage
    rate = float(np.mean(window[-schedule.window:]))
    return stage + 1 if rate >= schedule.success_threshold else stage


class CurriculumTracker:
    """Owns the episode-outcome window and the current stage."""

    def __init__(self, schedule: CurriculumSchedule, stage: int = 0):
        self.schedule = schedule
        self.stage = stage
        self.window = deque(maxlen=max(schedule.window, 1))

    def record(self, successes) -> bool:
        """Append episode outcomes; True if the stage advanced."""
        for s in np.atleast_1d(successes):
            self.window.append(bool(s))
        new_stage = curriculum_advance(self.window, self.stage, self.schedule)
        if new_stage != self.stage:
            self.stage = new_stage
            self.window.clear()
            return True
        return False

    @property
    def stage_name(self) -> str:
        if self.schedule.stages and self.stage < len(self.schedule.stages):
            return self.schedule.stages[self.stage].name
        return "default"
