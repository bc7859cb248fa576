import numpy as np
import pytest

from oracles import max_rel_error, numeric_grad, sample_indices
from phrasesynth import convops as ops


def naive_conv1d(x, w, b):
    """Direct triple-loop 'same' 1-D convolution."""
    batch, c_in, length = x.shape
    c_out, _, k = w.shape
    pad = (k - 1) // 2
    y = np.zeros((batch, c_out, length))
    for bi in range(batch):
        for o in range(c_out):
            for t in range(length):
                acc = b[o]
                for c in range(c_in):
                    for j in range(k):
                        src = t + j - pad
                        if 0 <= src < length:
                            acc += w[o, c, j] * x[bi, c, src]
                y[bi, o, t] = acc
    return y


def naive_conv2d3(x, w, b):
    """Direct loop 'same' 3x3 2-D convolution."""
    batch, c_in, nf, nt = x.shape
    c_out = w.shape[0]
    y = np.zeros((batch, c_out, nf, nt))
    for bi in range(batch):
        for o in range(c_out):
            for i in range(nf):
                for j in range(nt):
                    acc = b[o]
                    for c in range(c_in):
                        for di in range(3):
                            for dj in range(3):
                                si, sj = i + di - 1, j + dj - 1
                                if 0 <= si < nf and 0 <= sj < nt:
                                    acc += w[o, c, di, dj] * x[bi, c, si, sj]
                    y[bi, o, i, j] = acc
    return y


class TestForwardOracles:
    def test_conv1d_matches_naive(self, rng):
        x = rng.standard_normal((2, 3, 9))
        w = rng.standard_normal((4, 3, 5))
        b = rng.standard_normal(4)
        y, _ = ops.conv1d_forward(x, w, b)
        assert np.allclose(y, naive_conv1d(x, w, b), atol=1e-12)

    def test_conv2d3_matches_naive(self, rng):
        x = rng.standard_normal((2, 3, 6, 5))
        w = rng.standard_normal((2, 3, 3, 3))
        b = rng.standard_normal(2)
        y, _ = ops.conv2d3_forward(x, w, b)
        assert np.allclose(y, naive_conv2d3(x, w, b), atol=1e-12)

    def test_conv2d3_float32_matches_naive(self, rng):
        x = rng.standard_normal((1, 2, 5, 4)).astype(np.float32)
        w = rng.standard_normal((3, 2, 3, 3)).astype(np.float32)
        b = rng.standard_normal(3).astype(np.float32)
        y, _ = ops.conv2d3_forward(x, w, b)
        assert np.allclose(y, naive_conv2d3(x, w, b), atol=1e-5)


class TestGradients:
    def check(self, fwd, bwd, x, w, b, dy, rng):
        _, cache = fwd(x, w, b)
        dx, dw, db = bwd(dy, cache)
        analytic = {"x": dx, "w": dw, "b": db}
        worst = 0.0
        for name, arr in (("x", x), ("w", w), ("b", b)):
            def loss():
                y, _ = fwd(x, w, b)
                return float(np.sum(y * dy))
            idxs = sample_indices(rng, arr.shape, limit=20)
            numeric = numeric_grad(loss, arr, idxs)
            ana = {idx: analytic[name][idx] for idx in idxs}
            worst = max(worst, max_rel_error(ana, numeric))
        assert worst < 1e-6, worst

    def test_conv1d(self, rng):
        x = rng.standard_normal((2, 3, 8))
        w = rng.standard_normal((4, 3, 5)) * 0.4
        b = rng.standard_normal(4) * 0.1
        dy = rng.standard_normal((2, 4, 8))
        self.check(ops.conv1d_forward, ops.conv1d_backward, x, w, b, dy, rng)

    def test_conv1d_1x1(self, rng):
        x = rng.standard_normal((1, 4, 6))
        w = rng.standard_normal((3, 4, 1)) * 0.4
        b = rng.standard_normal(3) * 0.1
        dy = rng.standard_normal((1, 3, 6))
        self.check(ops.conv1d_forward, ops.conv1d_backward, x, w, b, dy, rng)

    def test_conv2d3(self, rng):
        x = rng.standard_normal((2, 2, 5, 4))
        w = rng.standard_normal((3, 2, 3, 3)) * 0.4
        b = rng.standard_normal(3) * 0.1
        dy = rng.standard_normal((2, 3, 5, 4))
        self.check(ops.conv2d3_forward, ops.conv2d3_backward, x, w, b, dy, rng)

    @pytest.mark.parametrize("fwd,bwd", [
        (ops.softplus_forward, ops.softplus_backward),
        (ops.tanh_forward, ops.tanh_backward),
        (ops.leaky_relu_forward, ops.leaky_relu_backward),
    ])
    def test_activations(self, fwd, bwd, rng):
        x = rng.standard_normal(64) + 0.01  # stay off the leaky kink
        dy = rng.standard_normal(64)
        _, cache = fwd(x)
        dx = bwd(dy, cache)
        idxs = sample_indices(rng, x.shape, limit=16)

        def loss():
            y, _ = fwd(x)
            return float(np.sum(y * dy))

        numeric = numeric_grad(loss, x, idxs)
        assert max_rel_error({i: dx[i] for i in idxs}, numeric) < 1e-6

    def test_resampling_ops_are_adjoint(self, rng):
        x = rng.standard_normal((2, 3, 8))
        for fwd, bwd in ((ops.decimate2_forward, ops.decimate2_backward),
                         (ops.zerostuff2_forward, ops.zerostuff2_backward)):
            y, cache = fwd(x)
            dy = rng.standard_normal(y.shape)
            dx = bwd(dy, cache)
            assert np.isclose(np.sum(y * dy), np.sum(x * dx))


class TestInit:
    def test_fan_in_bound(self):
        rng = np.random.default_rng(0)
        w = ops.uniform_init(rng, (50, 100), fan_in=100)
        assert np.max(np.abs(w)) <= 0.1
        assert w.dtype == np.float32

    def test_seeded(self):
        a = ops.uniform_init(np.random.default_rng(5), (10, 10), 10)
        b = ops.uniform_init(np.random.default_rng(5), (10, 10), 10)
        assert np.array_equal(a, b)
