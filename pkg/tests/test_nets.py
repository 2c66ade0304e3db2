import numpy as np
import pytest

from diffquad.autodiff import Tape, ops
from diffquad.envs.tasks import Observation
from diffquad.nets import (PolicyValueNet, cnn_encode, load_checkpoint, mlp_forward,
                           save_checkpoint)
from diffquad.nets.checkpoint import CheckpointError
from diffquad.nets.network import init_cnn, init_mlp


def obs_of(x, image=None):
    return Observation(proprio=x, image=image)


class TestMlp:
    def test_zero_params_zero_output(self):
        params = {"pi.w0": np.zeros((5, 8)), "pi.b0": np.zeros(8),
                  "pi.w1": np.zeros((8, 2)), "pi.b1": np.zeros(2)}
        y = mlp_forward(params, np.ones((3, 5)), "pi", 2)
        np.testing.assert_array_equal(y, np.zeros((3, 2)))

    def test_single_linear_layer_is_matmul(self):
        rng = np.random.default_rng(0)
        w = rng.normal(size=(4, 3))
        params = {"pi.w0": w, "pi.b0": np.zeros(3)}
        x = rng.normal(size=(2, 4))
        np.testing.assert_allclose(mlp_forward(params, x, "pi", 1), x @ w)

    def test_gradients_match_fd(self):
        rng = np.random.default_rng(1)
        params = {}
        init_mlp(params, "pi", (3, 6, 2), rng)
        x = rng.normal(size=(4, 3))

        def loss_np(pdict):
            y = mlp_forward(pdict, x, "pi", 2)
            return float(np.sum(y * y))

        tape = Tape()
        lifted = {k: tape.leaf(v) for k, v in params.items()}
        y = mlp_forward(lifted, x, "pi", 2)
        loss = ops.sum_(ops.mul(y, y))
        grads = tape.backward(loss)

        for key in params:
            g = grads[lifted[key].index]
            flat = params[key].ravel()
            for i in range(min(flat.size, 6)):
                h = 1e-6
                pp = {k: v.copy() for k, v in params.items()}
                pm = {k: v.copy() for k, v in params.items()}
                pp[key].ravel()[i] += h
                pm[key].ravel()[i] -= h
                fd = (loss_np(pp) - loss_np(pm)) / (2 * h)
                assert g.ravel()[i] == pytest.approx(fd, rel=1e-5, abs=1e-9)


class TestCnn:
    def test_zero_image_zero_features_premlp(self):
        rng = np.random.default_rng(2)
        params = {}
        init_cnn(params, "cnn", rng, feat_dim=16)
        params["cnn.fc_b"][:] = 0.0
        feats = cnn_encode(params, np.zeros((2, 64, 64)))
        np.testing.assert_allclose(np.asarray(feats), 0.0, atol=1e-12)

    def test_feature_width(self):
        rng = np.random.default_rng(3)
        params = {}
        init_cnn(params, "cnn", rng, feat_dim=24)
        feats = cnn_encode(params, rng.normal(size=(3, 64, 64)))
        assert np.shape(feats) == (3, 24)

    def test_translation_sensitivity(self):
        rng = np.random.default_rng(4)
        params = {}
        init_cnn(params, "cnn", rng, feat_dim=16)
        img_a = np.zeros((1, 64, 64))
        img_a[0, 10, 10] = 5.0
        img_b = np.zeros((1, 64, 64))
        img_b[0, 40, 40] = 5.0
        fa = np.asarray(cnn_encode(params, img_a))
        fb = np.asarray(cnn_encode(params, img_b))
        assert not np.allclose(fa, fb)

    def test_conv2d_matches_fd(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(2, 2, 8, 8))
        k = rng.normal(size=(3, 2, 3, 3))
        b = rng.normal(size=3)

        def loss_np(xv, kv, bv):
            out = ops.conv2d(xv, kv, bv, stride=2)
            return float(np.sum(out * out))

        tape = Tape()
        vx, vk, vb = tape.leaf(x), tape.leaf(k), tape.leaf(b)
        out = ops.conv2d(vx, vk, vb, stride=2)
        loss = ops.sum_(ops.mul(out, out))
        table = tape.backward(loss)
        for var, arr, name in ((vx, x, "x"), (vk, k, "k"), (vb, b, "b")):
            g = table[var.index]
            flat_idx = np.argsort(-np.abs(g.ravel()))[:5]
            for i in flat_idx:
                h = 1e-6
                ap, am = arr.copy(), arr.copy()
                ap.ravel()[i] += h
                am.ravel()[i] -= h
                args_p = {"x": (ap, k, b), "k": (x, ap, b), "b": (x, k, ap)}[name]
                args_m = {"x": (am, k, b), "k": (x, am, b), "b": (x, k, am)}[name]
                fd = (loss_np(*args_p) - loss_np(*args_m)) / (2 * h)
                assert g.ravel()[i] == pytest.approx(fd, rel=1e-5, abs=1e-8)


class TestPolicy:
    def test_deterministic_zero_mean_gives_zero_action(self):
        net = PolicyValueNet(obs_dim=13, seed=0)
        for k in net.params:
            if k.startswith("pi."):
                net.params[k] = np.zeros_like(net.params[k])
        u = net.act_deterministic(net.params, obs_of(np.ones((2, 13))))
        np.testing.assert_array_equal(np.asarray(u), np.zeros((2, 4)))

    def test_actions_bounded(self):
        net = PolicyValueNet(obs_dim=13, seed=1)
        rng = np.random.default_rng(0)
        obs = obs_of(rng.normal(size=(64, 13)) * 10)
        u_det = np.asarray(net.act_deterministic(net.params, obs))
        u_sto, _, _ = net.act_stochastic(obs, rng)
        assert np.all(np.abs(u_det) <= 1.0) and np.all(np.abs(u_sto) <= 1.0)

    def test_deterministic_forward_repeatable(self):
        net = PolicyValueNet(obs_dim=13, seed=2)
        obs = obs_of(np.random.default_rng(1).normal(size=(4, 13)))
        u1 = np.asarray(net.act_deterministic(net.params, obs))
        u2 = np.asarray(net.act_deterministic(net.params, obs))
        np.testing.assert_array_equal(u1, u2)

    def test_log_prob_consistency(self):
        # tape log_prob at collection parameters equals the collected value
        net = PolicyValueNet(obs_dim=8, seed=3)
        rng = np.random.default_rng(2)
        obs = obs_of(rng.normal(size=(16, 8)))
        _, z, logp = net.act_stochastic(obs, rng)
        lp2 = np.asarray(net.log_prob(net.params, obs, z))
        np.testing.assert_allclose(lp2, logp, rtol=1e-12)

    def test_log_prob_integrates_to_one_1d(self):
        # marginal of one action dim: histogram of samples vs exp(logp)
        net = PolicyValueNet(obs_dim=4, act_dim=1, hidden=(8,), seed=4)
        rng = np.random.default_rng(3)
        obs = obs_of(np.zeros((200_000, 4)))
        u, z, logp = net.act_stochastic(obs, rng)
        # numeric integration of the squashed density over u in (-1, 1)
        grid_z = np.linspace(-8, 8, 20001)
        mean = float(np.asarray(net.actor_mean(net.params, obs_of(np.zeros((1, 4)))))[0, 0])
        log_std = float(np.clip(net.params["log_std"][0], -5, 1))
        std = np.exp(log_std)
        pdf_z = np.exp(-0.5 * ((grid_z - mean) / std) ** 2) / (std * np.sqrt(2 * np.pi))
        mass = np.trapezoid(pdf_z, grid_z)
        assert mass == pytest.approx(1.0, abs=1e-6)
        # and the sample mean of exp(logp - logp) stays finite/consistent
        assert np.isfinite(logp).all()

    def test_value_head_shape(self):
        net = PolicyValueNet(obs_dim=13, seed=5)
        v = net.value(net.params, obs_of(np.random.default_rng(4).normal(size=(7, 13))))
        assert np.shape(v) == (7,)

    def test_policy_gradient_matches_fd_small_net(self):
        net = PolicyValueNet(obs_dim=5, act_dim=2, hidden=(8, 8), seed=6)
        rng = np.random.default_rng(5)
        obs = obs_of(rng.normal(size=(6, 5)))

        def loss_np(params):
            u = net.act_deterministic(params, obs)
            return float(np.sum(np.asarray(u) ** 2))

        tape = Tape()
        lifted = net.lift(tape)
        u = net.act_deterministic(lifted, obs)
        loss = ops.sum_(ops.mul(u, u))
        table = tape.backward(loss)
        max_rel = 0.0
        for key in ("pi.w0", "pi.b1", "pi.w2"):
            g = table[lifted[key].index]
            flat = net.params[key].ravel()
            idx = np.argsort(-np.abs(g.ravel()))[:4]
            for i in idx:
                h = 1e-6
                pp = {k: v.copy() for k, v in net.params.items()}
                pm = {k: v.copy() for k, v in net.params.items()}
                pp[key].ravel()[i] += h
                pm[key].ravel()[i] -= h
                fd = (loss_np(pp) - loss_np(pm)) / (2 * h)
                denom = max(abs(fd), abs(g.ravel()[i]), 1e-10)
                max_rel = max(max_rel, abs(fd - g.ravel()[i]) / denom)
        assert max_rel <= 1e-5


class TestCheckpoint:
    def test_roundtrip_bit_exact_f64(self, tmp_path):
        net = PolicyValueNet(obs_dim=13, seed=7)
        path = tmp_path / "ckpt.bin"
        save_checkpoint(net.params, path, "float64")
        loaded, precision = load_checkpoint(path)
        assert precision == "float64"
        assert set(loaded) == set(net.params)
        for k in net.params:
            assert loaded[k].tobytes() == np.ascontiguousarray(net.params[k]).tobytes()

    def test_roundtrip_f32(self, tmp_path):
        net = PolicyValueNet(obs_dim=5, hidden=(4,), seed=8)
        path = tmp_path / "ckpt32.bin"
        save_checkpoint(net.params, path, "float32")
        loaded, precision = load_checkpoint(path)
        assert precision == "float32"
        for k in net.params:
            assert loaded[k].dtype == np.dtype("<f4")
            np.testing.assert_array_equal(
                loaded[k], np.asarray(net.params[k], dtype="<f4"))

    def test_magic_check(self, tmp_path):
        bad = tmp_path / "bad.bin"
        bad.write_bytes(b"NOPE" + b"\0" * 64)
        with pytest.raises(CheckpointError):
            load_checkpoint(bad)

    def test_header_fields(self, tmp_path):
        net = PolicyValueNet(obs_dim=3, hidden=(4,), seed=9)
        path = tmp_path / "c.bin"
        save_checkpoint(net.params, path, "float64")
        head = path.read_bytes()[:13]
        assert head[:4] == b"E2EF"
        assert int.from_bytes(head[4:8], "little") == 1
        assert head[8] == 8
        assert int.from_bytes(head[9:13], "little") == len(net.params)
