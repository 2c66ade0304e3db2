"""Environment configuration: tasks, randomization ranges, thresholds.

The published randomization table names which quantities each task draws
(initial position/velocity, gate pose, obstacle positions, pad size and
shape); the numeric ranges are ours and live here so runs can audit and
override them.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

TASKS = ("hover", "landing", "tracking", "racing", "visual_landing",
         "racing_obstacles")
VISION_TASKS = ("visual_landing", "racing_obstacles")

# measured command-path delays: ~90 ms offboard, <30 ms onboard, at 30 Hz
LATENCY_PRESETS = {"none": 0, "onboard": 2, "offboard": 3}

PAD_SHAPES = ("circle", "square", "triangle")


@dataclass
class RandomizationConfig:
    """Uniform sampling ranges applied at reset (center ± half)."""

    p_center: tuple = (0.0, 0.0, 1.5)
    p_half: tuple = (1.0, 1.0, 0.5)
    v_half: tuple = (0.0, 0.0, 0.0)
    yaw_half: float = 0.0
    tilt_half: float = 0.0          # roll/pitch range [rad]
    omega_half: float = 0.0         # initial body-rate range [rad/s]
    gate_pos_half: tuple = (0.0, 0.0, 0.0)
    gate_yaw_half: float = 0.0
    obstacle_field_half: tuple = (3.0, 3.0, 1.0)  # centered on the track
    obstacle_radius: tuple = (0.15, 0.45)         # (min, max)
    pad_size: tuple = (0.25, 0.25)                # (min, max) half-size [m]
    pad_shapes: tuple = PAD_SHAPES


@dataclass
class NoiseConfig:
    """Sensor-noise magnitudes; zero means the channel is exact."""

    inv_depth_sigma: float = 0.0     # Gaussian in inverse-depth domain
    salt_pepper_prob: float = 0.0    # fraction of pixels forced to near/far
    poisson_scale: float = 0.0       # photon-count scale; 0 disables
    speckle_sigma: float = 0.0       # multiplicative Gaussian
    redwood_disp_sigma: float = 0.0  # disparity-domain Gaussian
    redwood_disp_quant: float = 0.0  # disparity quantization step
    redwood_dropout: float = 0.0     # per-pixel dropout to far clip
    gyro_sigma: float = 0.0          # white noise on body rates [rad/s]
    gyro_bias_rw_sigma: float = 0.0  # bias random-walk increment per step

    @property
    def any_image(self) -> bool:
        return any((self.inv_depth_sigma, self.salt_pepper_prob, self.poisson_scale,
                    self.speckle_sigma, self.redwood_disp_sigma,
                    self.redwood_disp_quant, self.redwood_dropout))

    @property
    def any_imu(self) -> bool:
        return any((self.gyro_sigma, self.gyro_bias_rw_sigma))


@dataclass
class CurriculumStage:
    name: str
    overrides: dict = field(default_factory=dict)


@dataclass
class CurriculumSchedule:
    stages: list = field(default_factory=list)
    success_threshold: float = 0.8
    window: int = 200


@dataclass
class EnvConfig:
    task: str = "hover"
    quad: object = "vis-h"
    num_envs: int = 16
    control_dt: float = 1.0 / 30.0
    substeps: int = 4
    episode_len: int = 256
    latency_frames: int = 0
    omega_range: tuple = (6.0, 6.0, 3.0)   # CTBR body-rate span [rad/s]
    goal: tuple = (0.0, 0.0, 1.5)
    randomization: RandomizationConfig = field(default_factory=RandomizationConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    curriculum: CurriculumSchedule = field(default_factory=CurriculumSchedule)
    curriculum_stage: int = 0

    # termination / success thresholds
    arrive_dist: float = 0.2
    arrive_speed: float = 0.2
    land_z_tol: float = 0.05
    land_xy_tol: float = 0.10
    land_speed_tol: float = 0.5
    touch_z: float = 0.03
    collision_radius: float = 0.15
    bounds_xy: float = 15.0
    bounds_z: float = 10.0

    # tracking
    traj_kind: str = "circle"
    traj_speed: float = 1.0
    traj_scale: float = 3.0
    traj_height: float = 1.5
    traj_points: int = 10

    # racing
    track_radius: float = 3.5
    gate_height: float = 1.5
    gate_half_w: float = 0.5
    gate_half_h: float = 0.5
    n_gates: int = 4
    n_obstacles: int = 4

    # vision
    camera_fov: float = 90.0
    camera_near: float = 0.05
    camera_far: float = 10.0

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}; expected one of {TASKS}")
        if self.latency_frames < 0:
            raise ValueError("latency_frames must be >= 0")
        for name in ("p_half", "v_half"):
            if any(h < 0 for h in getattr(self.randomization, name)):
                raise ValueError(f"randomization.{name} must be non-negative")

    def stage_value(self, key, default):
        """Config value after curriculum-stage overrides."""
        stages = self.curriculum.stages
        if stages and 0 <= self.curriculum_stage < len(stages):
            ov = stages[self.curriculum_stage].overrides
            if key in ov:
                return ov[key]
        return getattr(self, key, default)

    def as_dict(self) -> dict:
        return asdict(self)


def default_env_config(task: str, num_envs: int = 16, **overrides) -> EnvConfig:
    """Task presets: spawn ranges, thresholds and scene defaults."""
    rand = RandomizationConfig()
    kw = dict(task=task, num_envs=num_envs)
    if task == "hover":
        rand.p_center, rand.p_half = (0.0, 0.0, 1.5), (1.0, 1.0, 0.5)
        rand.v_half = (0.3, 0.3, 0.2)
        kw["goal"] = (0.0, 0.0, 1.5)
    elif task == "landing":
        rand.p_center, rand.p_half = (0.0, 0.0, 1.2), (0.8, 0.8, 0.7)
        kw["goal"] = (0.0, 0.0, 0.0)
        kw["episode_len"] = 300
    elif task == "tracking":
        rand.p_center, rand.p_half = (3.0, 0.0, 1.5), (0.8, 0.8, 0.5)
        rand.v_half = (0.3, 0.3, 0.2)
    elif task == "racing":
        rand.p_center, rand.p_half = (2.47, -2.47, 1.5), (0.5, 0.5, 0.3)
        kw["episode_len"] = 512
    elif task == "visual_landing":
        rand.p_center, rand.p_half = (0.0, 0.0, 2.0), (0.6, 0.6, 0.5)
        rand.pad_size = (0.2, 0.3)
        kw["goal"] = (0.0, 0.0, 0.0)
        kw["episode_len"] = 300
    elif task == "racing_obstacles":
        rand.p_center, rand.p_half = (2.47, -2.47, 1.5), (0.5, 0.5, 0.3)
        rand.gate_pos_half = (0.3, 0.3, 0.2)
        rand.gate_yaw_half = 0.3
        kw["episode_len"] = 512
        kw["curriculum"] = CurriculumSchedule(stages=[
            CurriculumStage("obstacle-free racing", {"n_obstacles": 0}),
            CurriculumStage("sparse obstacle racing", {"n_obstacles": 4}),
            CurriculumStage("dense obstacle racing", {"n_obstacles": 8}),
        ])
    cfg = EnvConfig(randomization=rand, **kw)
    for key, val in overrides.items():
        if not hasattr(cfg, key):
            raise ValueError(f"unknown EnvConfig field {key!r}")
        setattr(cfg, key, val)
    return cfg
