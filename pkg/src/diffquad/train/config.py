"""Training hyperparameters.

Defaults follow the published training table: Adam, discount 0.99, horizon
96, clip 0.2, GAE 0.95, with learning rates decaying 1e-3 -> 1e-5 (BPTT)
and 1e-4 -> 1e-5 (PPO). Batch/env counts default to desk scale; the paper's
full-scale run used 100 envs and 25600-transition batches.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict


@dataclass
class TrainConfig:
    algo: str = "bptt"               # bptt | ppo
    gamma: float = 0.99
    horizon: int = 96                # BPTT rollout window / PPO steps per env
    num_envs: int = 16
    total_env_steps: int = 2_000_000
    lr_start: float = 1e-3
    lr_end: float = 1e-5
    seed: int = 0
    workers: int = 1

    # BPTT
    grad_clip: float = 10.0
    reservoir_size: int = 100_000
    reservoir_p: float = 0.0         # probability a reset draws a stored state

    # PPO
    clip_eps: float = 0.2
    gae_lambda: float = 0.95
    epochs: int = 10
    minibatches: int = 4
    value_coeff: float = 0.5
    entropy_coeff: float = 0.0
    kl_cap: float = 0.15

    # evaluation cadence / early stop
    eval_every_updates: int = 10
    eval_episodes: int = 32
    stop_at_metric: float = 0.0      # stop early once eval metric <= this (0 disables)

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.algo == "ppo" and self.clip_eps <= 0:
            raise ValueError("clip_eps must be positive")

    @property
    def batch_size(self) -> int:
        return self.horizon * self.num_envs

    def as_dict(self) -> dict:
        return asdict(self)


def default_train_config(algo: str, **overrides) -> TrainConfig:
    cfg = TrainConfig(algo=algo)
    if algo == "ppo":
        cfg.lr_start, cfg.lr_end = 1e-4, 1e-5
        cfg.horizon = 128
    for key, val in overrides.items():
        if not hasattr(cfg, key):
            raise ValueError(f"unknown TrainConfig field {key!r}")
        setattr(cfg, key, val)
    return cfg
