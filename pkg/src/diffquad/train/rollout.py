"""Vectorized experience collection for PPO."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..envs.tasks import Observation, TaskEnv
from ..rewards import RewardSpec, compose


@dataclass
class EpisodeBatch:
    """On-policy transitions, (T, B) leading axes."""

    proprio: np.ndarray            # (T, B, obs_dim)
    images: np.ndarray | None      # (T, B, 64, 64) or None
    image_kind: str | None
    actions: np.ndarray            # (T, B, 4) squashed
    presquash: np.ndarray          # (T, B, 4) Gaussian samples
    log_probs: np.ndarray          # (T, B)
    rewards: np.ndarray            # (T, B)
    values: np.ndarray             # (T, B)
    dones: np.ndarray              # (T, B)
    truncated: np.ndarray          # (T, B)
    bootstrap: np.ndarray          # (B,)
    episode_returns: list = field(default_factory=list)
    episode_lengths: list = field(default_factory=list)
    episode_success: list = field(default_factory=list)
    reward_breakdown: dict = field(default_factory=dict)  # term -> mean per step

    @property
    def size(self) -> int:
        return self.rewards.size

    def flat_observation(self) -> Observation:
        t, b = self.rewards.shape
        img = None
        if self.images is not None:
            img = self.images.reshape(t * b, *self.images.shape[2:])
        return Observation(proprio=self.proprio.reshape(t * b, -1), image=img,
                           kind=self.image_kind)


def collect_rollouts(net, env: TaskEnv, reward_spec: RewardSpec, n_steps: int,
                     rng: np.random.Generator, ep_state=None) -> EpisodeBatch:
    """Step all envs n_steps with the stochastic policy, auto-resetting.

    ep_state carries (running return, running length) between batches so
    episode statistics stay correct across batch boundaries.
    """
    b = env.num_envs
    if ep_state is None:
        ep_state = {"ret": np.zeros(b), "len": np.zeros(b, dtype=np.int64)}

    proprio, images, actions, presquash = [], [], [], []
    log_probs, rewards, values, dones, truncs = [], [], [], [], []
    ep_returns, ep_lengths, ep_success = [], [], []
    breakdown_sums: dict = {}

    obs = env.observe()
    for _ in range(n_steps):
        u, z, logp = net.act_stochastic(obs, rng)
        val = np.asarray(net.value(net.params, obs))

        next_obs, ctx, done, info = env.step(u)
        total, breakdown = compose(reward_spec, ctx)
        total = np.asarray(total)
        for term, vals in breakdown.items():
            breakdown_sums[term] = breakdown_sums.get(term, 0.0) + float(np.mean(vals))

        proprio.append(np.asarray(obs.proprio))
        if obs.image is not None:
            images.append(obs.image)
        actions.append(u)
        presquash.append(z)
        log_probs.append(logp)
        values.append(val)
        rewards.append(total)
        dones.append(done.astype(np.float64))
        truncs.append(info["truncated"].astype(np.float64))

        ep_state["ret"] += total
        ep_state["len"] += 1
        if done.any():
            rows = np.flatnonzero(done)
            for i in rows:
                ep_returns.append(float(ep_state["ret"][i]))
                ep_lengths.append(int(ep_state["len"][i]))
                ep_success.append(bool(info["success"][i]))
            ep_state["ret"][rows] = 0.0
            ep_state["len"][rows] = 0
            env.reset(rows)
            next_obs = env.observe()
        obs = next_obs

    bootstrap = np.asarray(net.value(net.params, obs))
    t = len(rewards)
    batch = EpisodeBatch(
        proprio=np.stack(proprio),
        images=np.stack(images) if images else None,
        image_kind=obs.kind,
        actions=np.stack(actions),
        presquash=np.stack(presquash),
        log_probs=np.stack(log_probs),
        rewards=np.stack(rewards),
        values=np.stack(values),
        dones=np.stack(dones),
        truncated=np.stack(truncs),
        bootstrap=bootstrap,
        episode_returns=ep_returns,
        episode_lengths=ep_lengths,
        episode_success=ep_success,
        reward_breakdown={k: v / t for k, v in breakdown_sums.items()},
    )
    return batch
