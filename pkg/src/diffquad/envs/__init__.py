from .config import (EnvConfig, LATENCY_PRESETS, NoiseConfig, RandomizationConfig,
                     CurriculumSchedule, CurriculumStage, TASKS, VISION_TASKS,
                     default_env_config)
from .curriculum import CurriculumTracker, curriculum_advance
from .latency import LatencyBuffer
from .noise import ImuNoise, apply_depth_noise
from .scene import Gate, Scene, SpawnError, build_scene, gate_pass_check
from .tasks import Observation, PROPRIO_DIM, TaskEnv
from .trajectories import ReferenceTrajectory

__all__ = [
    "EnvConfig", "LATENCY_PRESETS", "NoiseConfig", "RandomizationConfig",
    "CurriculumSchedule", "CurriculumStage", "TASKS", "VISION_TASKS",
    "default_env_config", "CurriculumTracker", "curriculum_advance",
    "LatencyBuffer", "ImuNoise", "apply_depth_noise", "Gate", "Scene",
    "SpawnError", "build_scene", "gate_pass_check", "Observation",
    "PROPRIO_DIM", "TaskEnv", "ReferenceTrajectory",
]
