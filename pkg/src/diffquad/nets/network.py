"""Policy/value function approximators.

Parameters live in a flat name->array dict so trainers can lift the whole
set onto a tape (leaf per tensor), and checkpoints are a flat table.
Architectures: tanh MLPs for proprio inputs; vision tasks prepend a small
strided CNN encoder shared by the actor and critic heads, while state-based
tasks use a separate critic MLP.
"""

from __future__ import annotations

import numpy as np

from ..autodiff import ops

LOG_STD_INIT = -0.7  # std ~0.5 in pre-squash space
LOG_STD_MIN, LOG_STD_MAX = -5.0, 1.0
_SQUASH_EPS = 1e-6


def orthogonal(shape, gain, rng) -> np.ndarray:
    """Orthogonal-style init: QR of a Gaussian, scaled."""
    rows, cols = shape
    a = rng.normal(size=(max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    q = q.T if rows < cols else q
    return gain * q[:rows, :cols]


def init_mlp(params, prefix, sizes, rng, final_gain=0.01):
    """Append weights for an MLP with tanh hiddens and a linear head."""
    for i in range(len(sizes) - 1):
        gain = final_gain if i == len(sizes) - 2 else 1.0
        params[f"{prefix}.w{i}"] = orthogonal((sizes[i], sizes[i + 1]), gain, rng)
        params[f"{prefix}.b{i}"] = np.zeros(sizes[i + 1])


def mlp_forward(params, x, prefix, n_layers):
    """Affine+tanh stack with a linear final layer."""
    for i in range(n_layers):
        x = ops.add(ops.matmul(x, params[f"{prefix}.w{i}"]), params[f"{prefix}.b{i}"])
        if i < n_layers - 1:
            x = ops.tanh(x)
    return x


CNN_CHANNELS = (8, 16, 32)
CNN_KERNEL = 3
CNN_STRIDE = 2


def init_cnn(params, prefix, rng, feat_dim=128, in_hw=64):
    cin = 1
    hw = in_hw
    for li, cout in enumerate(CNN_CHANNELS):
        fan_in = cin * CNN_KERNEL * CNN_KERNEL
        params[f"{prefix}.k{li}"] = rng.normal(
            0.0, np.sqrt(2.0 / fan_in), size=(cout, cin, CNN_KERNEL, CNN_KERNEL))
        params[f"{prefix}.kb{li}"] = np.zeros(cout)
        hw = (hw - CNN_KERNEL) // CNN_STRIDE + 1
        cin = cout
    flat = CNN_CHANNELS[-1] * hw * hw
    params[f"{prefix}.fc_w"] = orthogonal((flat, feat_dim), 1.0, rng)
    params[f"{prefix}.fc_b"] = np.zeros(feat_dim)
    return flat


def cnn_encode(params, image, prefix="cnn"):
    """64x64 image batch -> feature vectors via strided conv stack."""
    b = np.shape(ops.value(image))[0]
    x = ops.reshape(image, (b, 1, 64, 64))
    for li in range(len(CNN_CHANNELS)):
        x = ops.conv2d(x, params[f"{prefix}.k{li}"], params[f"{prefix}.kb{li}"],
                       stride=CNN_STRIDE)
        x = ops.relu(x)
    flat = int(np.prod(np.shape(ops.value(x))[1:]))
    x = ops.reshape(x, (b, flat))
    x = ops.tanh(ops.add(ops.matmul(x, params[f"{prefix}.fc_w"]), params[f"{prefix}.fc_b"]))
    return x


class PolicyValueNet:
    """Tanh-squashed Gaussian actor plus a state-value critic."""

    def __init__(self, obs_dim: int, act_dim: int = 4, hidden=(128, 128),
                 image: bool = False, feat_dim: int = 128, seed: int = 0,
                 action_bias=None):
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self.hidden = tuple(hidden)
        self.image = image
        self.feat_dim = feat_dim
        rng = np.random.default_rng(np.random.SeedSequence((seed, 77)))
        params: dict[str, np.ndarray] = {}
        trunk_in = obs_dim + (feat_dim if image else 0)
        init_mlp(params, "pi", (trunk_in, *self.hidden, act_dim), rng)
        init_mlp(params, "vf", (trunk_in, *self.hidden, 1), rng, final_gain=1.0)
        if image:
            init_cnn(params, "cnn", rng, feat_dim)
        params["log_std"] = np.full(act_dim, LOG_STD_INIT)
        if action_bias is not None:
            # start the squashed mean at a chosen action (e.g. hover-hold)
            bias = np.arctanh(np.clip(np.asarray(action_bias, dtype=np.float64),
                                      -0.999, 0.999))
            params[f"pi.b{len(self.hidden)}"] = bias
        self.params = params

    # ---- forward passes (params may be arrays or tape Vars) ----------------

    def _trunk_input(self, params, obs):
        if not self.image:
            return obs.proprio
        feats = cnn_encode(params, obs.image)
        return ops.concat([obs.proprio, feats], axis=-1)

    def actor_mean(self, params, obs):
        x = self._trunk_input(params, obs)
        return mlp_forward(params, x, "pi", len(self.hidden) + 1)

    def value(self, params, obs):
        x = self._trunk_input(params, obs)
        v = mlp_forward(params, x, "vf", len(self.hidden) + 1)
        return ops.reshape(v, (np.shape(ops.value(v))[0],))

    def act_deterministic(self, params, obs):
        """Squashed mean action in [-1, 1]^4; tape-recordable."""
        return ops.tanh(self.actor_mean(params, obs))

    # ---- stochastic interface (numpy only, used during collection) ---------

    def act_stochastic(self, obs, rng: np.random.Generator):
        """Sample u = tanh(z), z ~ N(mean, std). Returns (u, z, log_prob)."""
        mean = np.asarray(self.actor_mean(self.params, obs))
        log_std = np.clip(self.params["log_std"], LOG_STD_MIN, LOG_STD_MAX)
        std = np.exp(log_std)
        z = mean + std * rng.normal(size=mean.shape)
        u = np.tanh(z)
        logp = self._log_prob_np(mean, log_std, z)
        return u, z, logp

    @staticmethod
    def _log_prob_np(mean, log_std, z):
        std = np.exp(log_std)
        base = -0.5 * ((z - mean) / std) ** 2 - log_std - 0.5 * np.log(2 * np.pi)
        squash = np.log(1.0 - np.tanh(z) ** 2 + _SQUASH_EPS)
        return np.sum(base - squash, axis=-1)

    def log_prob(self, params, obs, z):
        """Log-prob of stored pre-squash samples under current params (tape-aware)."""
        mean = self.actor_mean(params, obs)
        log_std = ops.clamp(params["log_std"], LOG_STD_MIN, LOG_STD_MAX)
        inv_std = ops.exp(ops.neg(log_std))
        delta = ops.mul(ops.sub(z, mean), inv_std)
        base = ops.sub(ops.mul(ops.mul(delta, delta), -0.5),
                       ops.add(log_std, 0.5 * np.log(2 * np.pi)))
        squash = np.log(1.0 - np.tanh(np.asarray(z)) ** 2 + _SQUASH_EPS)  # constant in params
        return ops.sum_(ops.sub(base, squash), axis=-1)

    def entropy(self, params):
        """Pre-squash Gaussian entropy (diagnostic; exact squashed entropy is intractable)."""
        log_std = ops.clamp(params["log_std"], LOG_STD_MIN, LOG_STD_MAX)
        return ops.sum_(ops.add(log_std, 0.5 * np.log(2 * np.pi * np.e)))

    # ---- parameter plumbing -------------------------------------------------

    def n_params(self) -> int:
        return int(sum(v.size for v in self.params.values()))

    def lift(self, tape):
        """Leaf every parameter tensor onto a tape; returns the Var dict."""
        return {k: tape.leaf(v) for k, v in self.params.items()}

    def apply_update(self, new_params: dict) -> None:
        self.params = {k: np.asarray(v) for k, v in new_params.items()}
