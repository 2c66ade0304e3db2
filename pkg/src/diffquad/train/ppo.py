"""Proximal policy optimization with the clipped surrogate and GAE."""

from __future__ import annotations

import numpy as np

from ..autodiff import Tape, ops
from ..envs import TaskEnv
from ..envs.tasks import Observation
from ..rewards import RewardSpec
from .adam import AdamState, adam_step, clip_grads
from .config import TrainConfig
from .gae import gae_advantages
from .rollout import EpisodeBatch, collect_rollouts
from .schedule import lr_schedule


def ppo_update(net, batch: EpisodeBatch, cfg: TrainConfig, adam: AdamState,
               lr: float, rng: np.random.Generator) -> dict:
    """Epochs of clipped-surrogate minibatch updates on one batch."""
    adv, returns = gae_advantages(batch.rewards, batch.values, batch.dones,
                                  batch.bootstrap, cfg.gamma, cfg.gae_lambda)
    obs_flat = batch.flat_observation()
    n = batch.size
    adv_f = adv.reshape(n)
    ret_f = returns.reshape(n)
    logp_old = batch.log_probs.reshape(n)
    z_f = batch.presquash.reshape(n, -1)

    mb_size = max(n // cfg.minibatches, 1)
    stats = {"policy_loss": 0.0, "value_loss": 0.0, "entropy": 0.0,
             "kl": 0.0, "clip_frac": 0.0, "epochs_run": 0, "kl_stop": False,
             "grad_norm": 0.0}
    n_minib = 0

    for _ in range(cfg.epochs):
        perm = rng.permutation(n)
        epoch_kl = []
        for start in range(0, n, mb_size):
            idx = perm[start:start + mb_size]
            mb_obs = Observation(
                proprio=obs_flat.proprio[idx],
                image=None if obs_flat.image is None else obs_flat.image[idx],
                kind=obs_flat.kind)
            tape = Tape()
            lifted = net.lift(tape)
            logp = net.log_prob(lifted, mb_obs, z_f[idx])
            ratio = ops.exp(ops.sub(logp, logp_old[idx]))
            clipped = ops.clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps)
            surrogate = ops.minimum(ops.mul(ratio, adv_f[idx]),
                                    ops.mul(clipped, adv_f[idx]))
            policy_loss = ops.neg(ops.mean(surrogate))

            v_pred = net.value(lifted, mb_obs)
            v_err = ops.sub(v_pred, ret_f[idx])
            value_loss = ops.mul(ops.mean(ops.mul(v_err, v_err)), 0.5)

            entropy = net.entropy(lifted)
            loss = ops.add(policy_loss, ops.mul(value_loss, cfg.value_coeff))
            if cfg.entropy_coeff:
                loss = ops.sub(loss, ops.mul(entropy, cfg.entropy_coeff))

            table = tape.backward(loss)
            grads = {k: table[v.index] for k, v in lifted.items()}
            grads, norm = clip_grads(grads, 10.0)
            net.apply_update(adam_step(net.params, grads, adam, lr))

            kl = float(np.mean(logp_old[idx] - np.asarray(ops.value(logp))))
            epoch_kl.append(kl)
            ratio_np = np.asarray(ops.value(ratio))
            stats["policy_loss"] += float(ops.value(policy_loss))
            stats["value_loss"] += float(ops.value(value_loss))
            stats["entropy"] += float(ops.value(entropy))
            stats["clip_frac"] += float(np.mean(np.abs(ratio_np - 1.0) > cfg.clip_eps))
            stats["grad_norm"] += norm
            n_minib += 1

        stats["epochs_run"] += 1
        stats["kl"] = float(np.mean(epoch_kl))
        if stats["kl"] > cfg.kl_cap:
            stats["kl_stop"] = True
            break

    for key in ("policy_loss", "value_loss", "entropy", "clip_frac", "grad_norm"):
        stats[key] /= max(n_minib, 1)
    adv_check = adv.reshape(-1)
    stats["adv_mean_abs"] = float(abs(adv_check.mean()))
    stats["adv_std"] = float(adv_check.std())
    return stats


class PpoTrainer:
    def __init__(self, net, env_cfg, reward_spec: RewardSpec, cfg: TrainConfig):
        self.net = net
        self.cfg = cfg
        self.reward_spec = reward_spec
        self.adam = AdamState(net.params)
        self.env = TaskEnv(env_cfg, seed=cfg.seed, differentiable=False)
        self.rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 314159)))
        self.ep_state = None
        self.env_steps = 0
        self.updates = 0
        self.recent_success: list = []

    @property
    def total_updates(self) -> int:
        per_update = self.cfg.horizon * self.env.num_envs
        return max(self.cfg.total_env_steps // per_update, 1)

    def step(self) -> dict:
        lr = lr_schedule(self.updates, self.total_updates, self.cfg.lr_start,
                         self.cfg.lr_end)
        if self.ep_state is None:
            self.ep_state = {"ret": np.zeros(self.env.num_envs),
                             "len": np.zeros(self.env.num_envs, dtype=np.int64)}
        batch = collect_rollouts(self.net, self.env, self.reward_spec,
                                 self.cfg.horizon, self.rng, self.ep_state)
        stats = ppo_update(self.net, batch, self.cfg, self.adam, lr, self.rng)
        self.updates += 1
        self.env_steps += batch.rewards.size
        self.recent_success.extend(batch.episode_success)
        self.recent_success = self.recent_success[-200:]

        merged = {
            "update": self.updates,
            "env_steps": self.env_steps,
            "lr": lr,
            "reward_mean": float(batch.rewards.mean()),
            "episode_return_mean": float(np.mean(batch.episode_returns))
            if batch.episode_returns else None,
            "episode_len_mean": float(np.mean(batch.episode_lengths))
            if batch.episode_lengths else None,
            "success_rate": float(np.mean(self.recent_success))
            if self.recent_success else 0.0,
        }
        merged.update({f"ppo/{k}": v for k, v in stats.items()})
        for term, v in batch.reward_breakdown.items():
            merged[f"reward/{term}"] = v
        return merged
