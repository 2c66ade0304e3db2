"""Generalized advantage estimation."""

from __future__ import annotations

import numpy as np


def gae_advantages(rewards, values, dones, bootstrap, gamma: float, lam: float,
                   normalize: bool = True):
    """Backward GAE recursion over a (T, B) batch.

    delta_t = r_t + gamma (1-done_t) V_{t+1} - V_t
    A_t     = delta_t + gamma lam (1-done_t) A_{t+1}

    `bootstrap` is V of the observation after the last step, per env.
    Returns (advantages, returns); returns use the raw advantages, the
    advantages themselves are normalized to zero mean / unit variance when
    requested.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    not_done = 1.0 - np.asarray(dones, dtype=np.float64)
    t_len = rewards.shape[0]

    adv = np.zeros_like(rewards)
    next_adv = np.zeros(rewards.shape[1])
    next_value = np.asarray(bootstrap, dtype=np.float64)
    for t in range(t_len - 1, -1, -1):
        delta = rewards[t] + gamma * not_done[t] * next_value - values[t]
        next_adv = delta + gamma * lam * not_done[t] * next_adv
        adv[t] = next_adv
        next_value = values[t]

    returns = adv + values
    if normalize:
        std = adv.std()
        adv = (adv - adv.mean()) / (std + 1e-8)
    return adv, returns
