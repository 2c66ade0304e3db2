from .adam import AdamState, adam_step, clip_grads, global_grad_norm
from .schedule import lr_schedule
from .gae import gae_advantages
from .config import TrainConfig, default_train_config
from .rollout import EpisodeBatch, collect_rollouts
from .bptt import BpttTrainer, TrainingDiverged, bptt_rollout_grads
from .ppo import PpoTrainer, ppo_update
from .reservoir import StateReservoir
from .metrics import MetricsWriter, read_metrics, write_csv
from .evaluate import evaluate, task_error

__all__ = [
    "AdamState", "adam_step", "clip_grads", "global_grad_norm", "lr_schedule",
    "gae_advantages", "TrainConfig", "default_train_config", "EpisodeBatch",
    "collect_rollouts", "BpttTrainer", "TrainingDiverged", "bptt_rollout_grads",
    "PpoTrainer", "ppo_update", "StateReservoir", "MetricsWriter", "read_metrics",
    "write_csv", "evaluate", "task_error",
]
