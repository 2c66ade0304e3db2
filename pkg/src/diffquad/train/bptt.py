"""Training by backpropagation through the simulated dynamics.

Each update unrolls the policy through the differentiable plant for a full
horizon on one tape per worker, forms the discounted dense-reward objective,
and ascends its analytic gradient (implemented as Adam descent on the
negated objective). Crashed envs freeze and their rewards are masked, so
the tape stays well-defined over the whole window.
"""

from __future__ import annotations

import threading

import numpy as np

from ..autodiff import Tape, ops
from ..envs import TaskEnv
from ..rewards import RewardSpec, compose
from .adam import AdamState, adam_step, clip_grads
from .config import TrainConfig
from .reservoir import StateReservoir
from .schedule import lr_schedule


class TrainingDiverged(RuntimeError):
    pass


def bptt_rollout_grads(net, env: TaskEnv, reward_spec: RewardSpec, cfg: TrainConfig):
    """One differentiable rollout; returns (grads, stats) for this env pool."""
    tape = Tape()
    lifted = net.lift(tape)
    b = env.num_envs

    loss_acc = None
    reward_sum = 0.0
    breakdown_means: dict = {}
    dist_last = None
    for t in range(cfg.horizon):
        obs = env.observe()
        action = net.act_deterministic(lifted, obs)
        _, ctx, _, info = env.step(action)
        total, breakdown = compose(reward_spec, ctx)
        weight = info["alive_mask"] * (cfg.gamma ** t) / b
        contrib = ops.sum_(ops.mul(total, weight))
        loss_acc = contrib if loss_acc is None else ops.add(loss_acc, contrib)
        reward_sum += float(np.sum(np.asarray(ops.value(total)) * info["alive_mask"]) / b)
        for term, vals in breakdown.items():
            breakdown_means[term] = breakdown_means.get(term, 0.0) + float(np.mean(vals))
        dist_last = info["dist"]

    loss = ops.neg(loss_acc)
    loss_val = float(ops.value(loss))
    if not np.isfinite(loss_val):
        raise TrainingDiverged(f"non-finite BPTT loss at horizon end: {loss_val}")
    table = tape.backward(loss)
    grads = {k: table[v.index] for k, v in lifted.items()}
    for k, g in grads.items():
        if not np.isfinite(g).all():
            raise TrainingDiverged(f"non-finite gradient in {k!r}")

    stats = {
        "loss": loss_val,
        "reward_mean": reward_sum / cfg.horizon,
        "dist_final": float(np.mean(dist_last)),
        "breakdown": {k: v / cfg.horizon for k, v in breakdown_means.items()},
        "nodes": len(tape),
        "frozen_frac": float(np.mean(env.frozen)),
    }
    return grads, stats


class BpttTrainer:
    """Owns the env pools (one per worker), reservoir, and Adam state."""

    def __init__(self, net, env_cfg, reward_spec: RewardSpec, cfg: TrainConfig):
        reward_spec.validate_for_bptt()
        self.net = net
        self.cfg = cfg
        self.reward_spec = reward_spec
        self.adam = AdamState(net.params)
        self.reservoir = StateReservoir(cfg.reservoir_size)
        self.reset_rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 555)))

        per_worker = env_cfg.num_envs // cfg.workers
        if per_worker * cfg.workers != env_cfg.num_envs:
            raise ValueError("num_envs must divide evenly across workers")
        self.envs = []
        for w in range(cfg.workers):
            import dataclasses
            wcfg = dataclasses.replace(env_cfg, num_envs=per_worker)
            self.envs.append(TaskEnv(wcfg, seed=cfg.seed, differentiable=True,
                                     env_index_offset=w * per_worker))
        self.env_steps = 0
        self.updates = 0

    @property
    def total_updates(self) -> int:
        steps_per_update = self.cfg.horizon * sum(e.num_envs for e in self.envs)
        return max(self.cfg.total_env_steps // steps_per_update, 1)

    def _refresh_pools(self) -> None:
        """Detach tapes, reseed finished envs (optionally from the reservoir)."""
        for env in self.envs:
            env.detach()
            alive_rows = np.flatnonzero(~env.frozen)
            self.reservoir.push_states(env.state, alive_rows)
            rows = env.finished_rows()
            if rows.size:
                env.reset(rows)
                if self.cfg.reservoir_p > 0 and len(self.reservoir):
                    use = rows[self.reset_rng.random(rows.size) < self.cfg.reservoir_p]
                    if use.size:
                        draw = self.reservoir.sample(use.size, self.reset_rng)
                        full = env.state.detach()
                        for j, row in enumerate(use):
                            full.p[row] = draw.p[j]
                            full.q[row] = draw.q[j]
                            full.v[row] = draw.v[j]
                            full.w[row] = draw.w[j]
                            full.rotor[row] = draw.rotor[j]
                        env.set_state_rows(full, use)

    def step(self) -> dict:
        """One update: rollouts (per worker), summed grads, Adam ascent."""
        lr = lr_schedule(self.updates, self.total_updates, self.cfg.lr_start,
                         self.cfg.lr_end)
        results: list = [None] * len(self.envs)

        def run(w):
            results[w] = bptt_rollout_grads(self.net, self.envs[w],
                                            self.reward_spec, self.cfg)

        if len(self.envs) == 1:
            run(0)
        else:
            threads = [threading.Thread(target=run, args=(w,))
                       for w in range(len(self.envs))]
            for th in threads:
                th.start()
            for th in threads:
                th.join()

        # fixed reduction order: worker 0, 1, ... regardless of completion order
        grads = {k: np.zeros_like(v) for k, v in self.net.params.items()}
        for w in range(len(self.envs)):
            for k, g in results[w][0].items():
                grads[k] = grads[k] + g / len(self.envs)

        grads, raw_norm = clip_grads(grads, self.cfg.grad_clip)
        self.net.apply_update(adam_step(self.net.params, grads, self.adam, lr))
        self._refresh_pools()

        self.updates += 1
        self.env_steps += self.cfg.horizon * sum(e.num_envs for e in self.envs)
        stats = results[0][1]
        merged = {
            "update": self.updates,
            "env_steps": self.env_steps,
            "lr": lr,
            "grad_norm": raw_norm,
            "loss": float(np.mean([r[1]["loss"] for r in results])),
            "reward_mean": float(np.mean([r[1]["reward_mean"] for r in results])),
            "dist_final": float(np.mean([r[1]["dist_final"] for r in results])),
            "frozen_frac": float(np.mean([r[1]["frozen_frac"] for r in results])),
        }
        for term, v in stats["breakdown"].items():
            merged[f"reward/{term}"] = v
        return merged
