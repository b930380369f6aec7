"""Finite-difference gradient checks for every layer type.

The oracle is 64-bit central differencing: for each leaf element, perturb by
+/-h and difference a scalar readout of the op. Analytic gradients must match
to 1e-5 relative (1e-6 on the plain conv case the engine is keyed on).
"""

import numpy as np
import pytest

from lumiprobe.nn import Tensor, ops
from lumiprobe.nn.layers import kaiming_uniform


def numeric_grad(f, leaf: Tensor, h: float = 1e-5) -> np.ndarray:
    g = np.zeros_like(leaf.data)
    flat = leaf.data.reshape(-1)
    gflat = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        hi = f()
        flat[i] = orig - h
        lo = f()
        flat[i] = orig
        gflat[i] = (hi - lo) / (2.0 * h)
    return g


def check_gradients(build, leaves, rtol=1e-5, h=1e-5):
    """build() -> scalar Tensor; leaves: list of float64 Tensors."""
    out = build()
    for leaf in leaves:
        leaf.grad = None
    out.backward()
    for leaf in leaves:
        assert leaf.grad is not None, "missing analytic gradient"
        num = numeric_grad(lambda: float(build().data), leaf, h=h)
        scale = max(np.abs(num).max(), np.abs(leaf.grad).max(), 1e-8)
        err = np.abs(leaf.grad - num).max() / scale
        assert err <= rtol, f"gradient mismatch {err:.2e} on {leaf.name or leaf.shape}"


def leaf(rng, shape, lo=-1.0, hi=1.0, name=""):
    t = Tensor(rng.uniform(lo, hi, size=shape).astype(np.float64), requires_grad=True)
    t.name = name
    return t


def readout(t: Tensor) -> Tensor:
    # Weighted sum to a scalar so every output element gets a distinct pull.
    w = Tensor(
        np.linspace(0.5, 1.5, t.size).reshape(t.shape).astype(np.float64)
    )
    return ops.mse(ops.mul(t, w), np.zeros(t.shape))


class TestConvGradients:
    def test_identity_kernel(self):
        x = Tensor(np.arange(16, dtype=np.float32).reshape(1, 1, 4, 4))
        w = Tensor(np.ones((1, 1, 1, 1), dtype=np.float32))
        out = ops.conv2d(x, w, None, 1, 0)
        assert np.array_equal(out.data, x.data)

    def test_shape_law_padded(self, rng):
        x = Tensor(rng.normal(size=(1, 1, 5, 5)).astype(np.float32))
        w = Tensor(rng.normal(size=(4, 1, 3, 3)).astype(np.float32))
        out = ops.conv2d(x, w, None, 1, 1)
        assert out.shape == (1, 4, 5, 5)

    def test_channel_mismatch_rejected(self, rng):
        x = Tensor(rng.normal(size=(1, 3, 5, 5)).astype(np.float32))
        w = Tensor(rng.normal(size=(4, 2, 3, 3)).astype(np.float32))
        with pytest.raises(ValueError, match="channel"):
            ops.conv2d(x, w, None)

    def test_finite_difference_reference_case(self, rng):
        x = leaf(rng, (2, 3, 6, 5), name="x")
        w = leaf(rng, (4, 3, 3, 3), name="w")
        b = leaf(rng, (4,), name="b")
        check_gradients(
            lambda: readout(ops.conv2d(x, w, b, stride=2, padding=1)),
            [x, w, b],
            rtol=1e-6,
        )

    @pytest.mark.parametrize("trial", range(20))
    def test_finite_difference_random_configs(self, trial):
        rng = np.random.default_rng(1000 + trial)
        stride = int(rng.integers(1, 3))
        padding = int(rng.integers(0, 2))
        kernel = int(rng.integers(1, 4))
        cin = int(rng.integers(1, 4))
        cout = int(rng.integers(1, 4))
        h = int(rng.integers(kernel, kernel + 4))
        w_ = int(rng.integers(kernel, kernel + 4))
        x = leaf(rng, (2, cin, h, w_), name="x")
        w = leaf(rng, (cout, cin, kernel, kernel), name="w")
        b = leaf(rng, (cout,), name="b")
        check_gradients(
            lambda: readout(ops.conv2d(x, w, b, stride, padding)), [x, w, b]
        )


class TestLayerGradients:
    @pytest.mark.parametrize("trial", range(20))
    def test_linear(self, trial):
        rng = np.random.default_rng(2000 + trial)
        n, fi, fo = (int(v) for v in rng.integers(1, 6, size=3))
        x = leaf(rng, (max(n, 1), fi), name="x")
        w = leaf(rng, (fo, fi), name="w")
        b = leaf(rng, (fo,), name="b")
        check_gradients(lambda: readout(ops.linear(x, w, b)), [x, w, b])

    @pytest.mark.parametrize("trial", range(20))
    def test_elu(self, trial):
        rng = np.random.default_rng(3000 + trial)
        x = leaf(rng, (3, 7), lo=-2.0, hi=2.0, name="x")
        check_gradients(lambda: readout(ops.elu(x)), [x])

    @pytest.mark.parametrize("trial", range(20))
    def test_sigmoid(self, trial):
        rng = np.random.default_rng(4000 + trial)
        x = leaf(rng, (2, 3, 2, 2), lo=-3.0, hi=3.0, name="x")
        check_gradients(lambda: readout(ops.sigmoid(x)), [x])

    @pytest.mark.parametrize("trial", range(20))
    def test_batch_norm_training(self, trial):
        rng = np.random.default_rng(5000 + trial)
        c = int(rng.integers(1, 4))
        x = leaf(rng, (4, c, 3, 3), name="x")
        gamma = leaf(rng, (c,), lo=0.5, hi=1.5, name="gamma")
        beta = leaf(rng, (c,), name="beta")

        def build():
            rm = np.zeros(c)
            rv = np.ones(c)
            return readout(ops.batch_norm(x, gamma, beta, rm, rv, training=True))

        check_gradients(build, [x, gamma, beta])

    @pytest.mark.parametrize("trial", range(20))
    def test_upsample2x(self, trial):
        rng = np.random.default_rng(6000 + trial)
        x = leaf(rng, (2, 2, 3, 4), name="x")
        check_gradients(lambda: readout(ops.upsample2x(x)), [x])

    @pytest.mark.parametrize("trial", range(20))
    def test_nearest_resize(self, trial):
        rng = np.random.default_rng(6500 + trial)
        x = leaf(rng, (1, 2, 5, 3), name="x")
        check_gradients(lambda: readout(ops.nearest_resize(x, 8, 8)), [x])

    @pytest.mark.parametrize("trial", range(20))
    def test_concat(self, trial):
        rng = np.random.default_rng(7000 + trial)
        a = leaf(rng, (2, 3, 2, 2), name="a")
        b = leaf(rng, (2, 2, 2, 2), name="b")
        check_gradients(lambda: readout(ops.concat([a, b], axis=1)), [a, b])

    @pytest.mark.parametrize("trial", range(20))
    def test_maxpool(self, trial):
        rng = np.random.default_rng(7500 + trial)
        x = leaf(rng, (2, 2, 5, 6), name="x")
        check_gradients(lambda: readout(ops.maxpool2x(x)), [x])

    @pytest.mark.parametrize("trial", range(20))
    def test_flatten_crop(self, trial):
        rng = np.random.default_rng(8000 + trial)
        x = leaf(rng, (2, 2, 4, 4), name="x")
        check_gradients(
            lambda: readout(ops.flatten(ops.crop2d(x, 3, 3))), [x]
        )

    @pytest.mark.parametrize("trial", range(20))
    def test_log(self, trial):
        rng = np.random.default_rng(8500 + trial)
        x = leaf(rng, (3, 5), lo=0.1, hi=2.0, name="x")
        check_gradients(lambda: readout(ops.log(x, eps=1e-4)), [x])


class TestFireModuleGradient:
    def test_full_module(self):
        from lumiprobe.nn.layers import Fire

        rng = np.random.default_rng(99)
        fire = Fire(rng, in_ch=8, squeeze=2, expand=4)
        # promote parameters to float64 for the check
        leaves = []
        for name, p in fire.named_params().items():
            p.data = p.data.astype(np.float64)
            p.name = name
            leaves.append(p)
        x = leaf(rng, (2, 8, 6, 6), name="x")
        leaves.append(x)

        def build():
            fire.norm.running_mean[:] = 0
            fire.norm.running_var[:] = 1
            return readout(fire(x))

        out = fire(x)
        assert out.shape == (2, 4, 6, 6)
        check_gradients(build, leaves)

    def test_zero_weights_reduce_to_bias_path(self, rng):
        from lumiprobe.nn.layers import Fire

        fire = Fire(np.random.default_rng(0), in_ch=3, squeeze=2, expand=4)
        for p in (fire.squeeze.weight, fire.expand1.weight, fire.expand3.weight):
            p.data = np.zeros_like(p.data)
        for p in (fire.squeeze.bias, fire.expand1.bias, fire.expand3.bias):
            p.data = np.zeros_like(p.data)
        x = Tensor(rng.normal(size=(4, 3, 5, 5)).astype(np.float32))
        out = fire(x)
        # all pre-norm activations are zero, so the output is BN of zeros
        assert np.allclose(out.data, 0.0, atol=1e-6)

    def test_odd_expand_rejected(self):
        from lumiprobe.nn.layers import Fire

        with pytest.raises(ValueError):
            Fire(np.random.default_rng(0), 4, 2, 5)


class TestLossGradients:
    def test_mse_value_and_grad(self, rng):
        pred = leaf(rng, (3, 4), name="pred")
        target = rng.normal(size=(3, 4))
        loss = ops.mse(pred, target)
        loss.backward()
        expected = 2.0 * (pred.data - target) / pred.size
        np.testing.assert_allclose(pred.grad, expected, rtol=1e-12)
        num = numeric_grad(lambda: float(ops.mse(pred, target).data), pred)
        np.testing.assert_allclose(pred.grad, num, rtol=1e-6, atol=1e-9)

    def test_cross_entropy_uniform(self):
        logits = Tensor(np.zeros((1, 2)), requires_grad=True)
        loss = ops.cross_entropy(logits, np.array([0]))
        assert float(loss.data) == pytest.approx(np.log(2.0), abs=1e-7)

    @pytest.mark.parametrize("trial", range(20))
    def test_cross_entropy_fd(self, trial):
        rng = np.random.default_rng(9000 + trial)
        n, k = int(rng.integers(1, 5)), int(rng.integers(2, 5))
        logits = leaf(rng, (n, k), lo=-2.0, hi=2.0, name="logits")
        labels = rng.integers(0, k, size=n)
        check_gradients(
            lambda: ops.cross_entropy(logits, labels), [logits]
        )
