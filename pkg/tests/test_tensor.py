import numpy as np
import pytest

from wavesr import tensor as T
from wavesr.errors import (
    ChannelMismatch,
    NonFiniteValue,
    NonScalarLoss,
    ShapeMismatch,
    ShiftTooLarge,
)
from wavesr.tensor import ConvParams, Tensor, grad_check, tensor_new


def make_conv(weight, bias, padding_mode="replicate", requires_grad=False):
    return ConvParams(
        Tensor(np.asarray(weight, dtype=np.float64), requires_grad=requires_grad),
        Tensor(np.asarray(bias, dtype=np.float64), requires_grad=requires_grad),
        padding_mode=padding_mode,
    )


class TestConstruction:
    def test_row_major_echo(self):
        t = tensor_new((1, 1, 2, 2), [1, 2, 3, 4])
        assert t.data.tolist() == [[[[1, 2], [3, 4]]]]

    def test_length_mismatch(self):
        with pytest.raises(ShapeMismatch):
            tensor_new((1, 1, 2, 2), [1, 2, 3])

    def test_nan_rejected(self):
        with pytest.raises(NonFiniteValue):
            tensor_new((1, 1, 1, 1), [float("nan")])

    def test_inf_rejected(self):
        with pytest.raises(NonFiniteValue):
            tensor_new((1, 1, 1, 1), [float("inf")])


class TestConv2d:
    def test_identity_1x1_kernel(self):
        x = Tensor(np.random.default_rng(0).uniform(-1, 1, (2, 3, 5, 5)))
        p = make_conv(np.eye(3).reshape(3, 3, 1, 1), np.zeros(3))
        y = T.conv2d(x, p)
        np.testing.assert_array_equal(y.data, x.data)

    def test_averaging_constant(self):
        x = Tensor(np.full((1, 1, 4, 4), 5.0))
        p = make_conv(np.full((1, 1, 3, 3), 1.0 / 9.0), np.zeros(1))
        y = T.conv2d(x, p)
        np.testing.assert_allclose(y.data, 5.0, atol=1e-12)

    def test_patch_sum_oracle(self):
        # independent nested-loop oracle over replicate-padded indices
        x = np.array([[1.0, 2.0], [3.0, 4.0]])
        expected = np.zeros((2, 2))
        for i in range(2):
            for j in range(2):
                acc = 0.0
                for di in (-1, 0, 1):
                    for dj in (-1, 0, 1):
                        ii = min(max(i + di, 0), 1)
                        jj = min(max(j + dj, 0), 1)
                        acc += x[ii, jj]
                expected[i, j] = acc
        p = make_conv(np.ones((1, 1, 3, 3)), np.zeros(1))
        y = T.conv2d(Tensor(x[None, None]), p)
        np.testing.assert_allclose(y.data[0, 0], expected, atol=1e-12)

    def test_channel_mismatch(self):
        p = make_conv(np.ones((1, 2, 3, 3)), np.zeros(1))
        with pytest.raises(ChannelMismatch):
            T.conv2d(Tensor(np.zeros((1, 3, 4, 4))), p)

    def test_even_kernel_rejected(self):
        with pytest.raises(ShapeMismatch):
            make_conv(np.ones((1, 1, 2, 2)), np.zeros(1))

    def test_linearity(self):
        rng = np.random.default_rng(1)
        x = rng.uniform(-1, 1, (1, 2, 6, 6))
        y = rng.uniform(-1, 1, (1, 2, 6, 6))
        p = make_conv(rng.uniform(-1, 1, (3, 2, 3, 3)), np.zeros(3))
        a, b = 1.7, -0.3
        lhs = T.conv2d(Tensor(a * x + b * y), p).data
        rhs = a * T.conv2d(Tensor(x), p).data + b * T.conv2d(Tensor(y), p).data
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


class TestShift2d:
    def test_null_shift(self):
        x = Tensor(np.random.default_rng(2).uniform(-1, 1, (1, 2, 4, 4)))
        np.testing.assert_array_equal(T.shift2d(x, 0, 0).data, x.data)

    def test_constant_replicate(self):
        x = Tensor(np.full((1, 1, 5, 5), 2.5))
        y = T.shift2d(x, 2, -1, "replicate")
        np.testing.assert_array_equal(y.data, x.data)

    def test_index_oracle(self):
        x = Tensor(np.array([[1.0, 2.0], [3.0, 4.0]])[None, None])
        y = T.shift2d(x, dx=1, dy=0, padding_mode="replicate")
        np.testing.assert_array_equal(y.data[0, 0], [[2, 2], [4, 4]])

    def test_zero_padding(self):
        x = Tensor(np.array([[1.0, 2.0], [3.0, 4.0]])[None, None])
        y = T.shift2d(x, dx=1, dy=0, padding_mode="zero")
        np.testing.assert_array_equal(y.data[0, 0], [[2, 0], [4, 0]])

    def test_round_trip_interior(self):
        x = np.random.default_rng(3).uniform(-1, 1, (1, 1, 8, 8))
        y = T.shift2d(T.shift2d(Tensor(x), 2, 0), -2, 0).data
        np.testing.assert_array_equal(y[:, :, :, 2:6], x[:, :, :, 2:6])

    def test_too_large(self):
        with pytest.raises(ShiftTooLarge):
            T.shift2d(Tensor(np.zeros((1, 1, 4, 4))), 4, 0)


class TestElementwise:
    def test_sub_self_is_zero(self):
        x = Tensor(np.random.default_rng(4).uniform(-1, 1, (1, 2, 3, 3)))
        assert np.all(T.sub(x, x).data == 0)

    def test_concat_channel_sum(self):
        a = Tensor(np.zeros((1, 3, 4, 4)))
        b = Tensor(np.ones((1, 16, 4, 4)))
        assert T.concat_channels(a, b).data.shape == (1, 19, 4, 4)

    def test_concat_shape_guard(self):
        with pytest.raises(ShapeMismatch):
            T.concat_channels(Tensor(np.zeros((1, 1, 4, 4))), Tensor(np.zeros((1, 1, 5, 4))))

    def test_relu(self):
        x = Tensor(np.array([-1.0, 0.0, 2.0]).reshape(1, 1, 1, 3))
        np.testing.assert_array_equal(T.activation(x, "relu").data.ravel(), [0, 0, 2])

    def test_add_shape_guard(self):
        with pytest.raises(ShapeMismatch):
            T.add(Tensor(np.zeros((1, 1, 2, 2))), Tensor(np.zeros((1, 1, 2, 3))))

    def test_finite_outputs_from_finite_inputs(self):
        # debug guard active (conftest); chain of ops on extreme finite values
        rng = np.random.default_rng(5)
        x = Tensor(rng.uniform(-50, 50, (1, 4, 8, 8)), requires_grad=True)
        p = ConvParams(
            Tensor(rng.uniform(-3, 3, (4, 4, 3, 3)), requires_grad=True),
            Tensor(rng.uniform(-3, 3, (4,)), requires_grad=True),
        )
        y = T.activation(T.conv2d(x, p), "sigmoid")
        y = T.activation(T.shift2d(y, 1, 1), "tanh")
        loss = T.mean(T.mul(y, y))
        loss.backward()
        assert np.all(np.isfinite(x.grad))


class TestBackward:
    def test_linear_map_gradient(self):
        x = np.random.default_rng(6).uniform(-1, 1, (1, 1, 3, 3))
        w = Tensor(np.random.default_rng(7).uniform(-1, 1, (1, 1, 3, 3)), requires_grad=True)
        loss = T.sum_(T.mul(w, Tensor(x)))
        loss.backward()
        np.testing.assert_allclose(w.grad, x, atol=1e-15)

    def test_unreachable_param_zero(self):
        p = Tensor(np.ones((1, 1, 2, 2)), requires_grad=True)
        x = Tensor(np.ones((1, 1, 2, 2)), requires_grad=True)
        T.sum_(x).backward()
        assert p.grad is None
        np.testing.assert_array_equal(T.grad_or_zero(p), 0)

    def test_non_scalar_loss(self):
        with pytest.raises(NonScalarLoss):
            T.backward(Tensor(np.zeros((1, 1, 2, 2))))

    def test_grad_accumulates_over_reuse(self):
        x = Tensor(np.full((1, 1, 1, 1), 3.0), requires_grad=True)
        loss = T.sum_(T.add(x, x))
        loss.backward()
        np.testing.assert_array_equal(x.grad, 2.0)


class TestGradCheck:
    def test_quadratic_1x1_conv(self):
        p = make_conv(np.array([[[[0.7]]]]), np.array([0.1]), requires_grad=True)
        x = Tensor(np.random.default_rng(8).uniform(-1, 1, (1, 1, 4, 4)))

        def f():
            y = T.conv2d(x, p)
            return T.mean(T.mul(y, y))

        rep = grad_check(f, [("w", p.weight), ("b", p.bias)], tol=1e-6)
        assert rep.passed, rep.summary()

    def test_l1_conv_matches_finite_differences(self):
        rng = np.random.default_rng(9)
        p = make_conv(rng.uniform(-0.5, 0.5, (2, 2, 3, 3)), rng.uniform(-0.5, 0.5, 2),
                      requires_grad=True)
        x = Tensor(rng.uniform(-1, 1, (1, 2, 5, 5)))
        t = Tensor(rng.uniform(-1, 1, (1, 2, 5, 5)))

        def f():
            return T.mean(T.abs_(T.sub(T.conv2d(x, p), t)))

        rep = grad_check(f, [("w", p.weight), ("b", p.bias)], tol=1e-4)
        assert rep.passed, rep.summary()

    def test_corrupted_gradient_fails(self):
        w = Tensor(np.array(0.5).reshape(1, 1, 1, 1), requires_grad=True)

        def f():
            # op with a deliberately broken backward rule (+0.1)
            y = T._make(w.data * w.data, [(w, lambda g: g * (2 * w.data + 0.1))])
            return T.sum_(y)

        rep = grad_check(f, [("w", w)], tol=1e-4)
        assert not rep.passed


class TestRandomOpGradients:
    """Every differentiable op on random inputs in [-1, 1]."""

    @pytest.mark.parametrize("seed", range(3))
    def test_combined_ops(self, seed):
        rng = np.random.default_rng(seed)
        x = Tensor(rng.uniform(-1, 1, (1, 2, 6, 6)), requires_grad=True)
        p = make_conv(rng.uniform(-1, 1, (2, 2, 3, 3)), rng.uniform(-1, 1, 2),
                      requires_grad=True)

        def f():
            y = T.conv2d(x, p)
            y = T.activation(y, "tanh")
            y = T.add(T.shift2d(y, 1, -1), T.scale(y, 0.5))
            return T.mean(T.mul(y, y))

        rep = grad_check(f, [("x", x), ("w", p.weight), ("b", p.bias)], tol=1e-4)
        assert rep.passed, rep.summary()
