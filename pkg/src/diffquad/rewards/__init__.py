from .spec import RewardSpec, RewardTerm, TransitionContext, compose
from .terms import (RewardContextError, SPARSE_TERMS, action_reward, anglev_reward,
                    avoid_reward, landing_vz_reward, orientation_reward,
                    progress_reward, sparse_reward, velocity_reward)
from .presets import default_reward_spec

__all__ = [
    "RewardSpec", "RewardTerm", "TransitionContext", "compose",
    "RewardContextError", "SPARSE_TERMS", "action_reward", "anglev_reward",
    "avoid_reward", "landing_vz_reward", "orientation_reward", "progress_reward",
    "sparse_reward", "velocity_reward", "default_reward_spec",
]
