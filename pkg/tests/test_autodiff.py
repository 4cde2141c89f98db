import numpy as np
import pytest

from gocoma import autodiff as ad
from gocoma.errors import NumericalFailureError

from oracles import central_diff, rel_err

RNG = np.random.default_rng(20240818)


def check_grad(fn, *arrays, tol=1e-6, h=1e-6):
    """FD-check d(sum(fn(*arrays)))/d(array_i) for every input."""
    leaves = [ad.Tensor(a.copy(), requires_grad=True) for a in arrays]
    out = ad.sum_(fn(*leaves))
    out.backward()

    def scalar(flat_args):
        tens = [ad.Tensor(a) for a in flat_args]
        return float(ad.sum_(fn(*tens)).data)

    for i, a in enumerate(arrays):
        def f_of_xi(x, i=i):
            args = [b.copy() for b in arrays]
            args[i] = x
            return scalar(args)

        num = central_diff(f_of_xi, a.copy(), h=h)
        ana = leaves[i].grad
        assert ana is not None
        assert rel_err(ana, num) < tol, f"input {i}: {ana} vs {num}"


class TestElementwise:
    def test_add_mul_broadcast(self):
        a = RNG.normal(size=(3, 4))
        b = RNG.normal(size=(4,))
        check_grad(lambda x, y: x * y + y, a, b)

    def test_sub_div(self):
        a = RNG.normal(size=(2, 5))
        b = RNG.uniform(0.5, 2.0, size=(2, 5))
        check_grad(lambda x, y: (x - y) / y, a, b)

    def test_neg_power(self):
        a = RNG.uniform(0.5, 1.5, size=(6,))
        check_grad(lambda x: -(x ** 3), a)

    def test_tanh(self):
        a = RNG.normal(size=(8,)) * 2
        check_grad(ad.tanh, a)

    def test_atanh(self):
        a = RNG.uniform(-0.9, 0.9, size=(8,))
        check_grad(ad.atanh, a)

    def test_sqrt(self):
        a = RNG.uniform(0.5, 4.0, size=(8,))
        check_grad(ad.sqrt, a)

    def test_exp_log(self):
        a = RNG.uniform(0.5, 2.0, size=(8,))
        check_grad(lambda x: ad.log(ad.exp(x) + 1.0), a)

    def test_cos(self):
        a = RNG.normal(size=(8,))
        check_grad(ad.cos, a)

    def test_relu(self):
        a = RNG.normal(size=(20,))
        a[np.abs(a) < 0.1] = 0.5  # keep clear of the kink
        check_grad(ad.relu, a)

    def test_clamp(self):
        a = RNG.normal(size=(20,)) * 2
        a[np.abs(np.abs(a) - 1.0) < 0.1] = 0.0  # keep clear of the clamp edges
        check_grad(lambda x: ad.clamp_max(ad.clamp_min(x, -1.0), 1.0), a)

    def test_where(self):
        a = RNG.normal(size=(10,))
        b = RNG.normal(size=(10,))
        cond = a > 0
        check_grad(lambda x, y: ad.where(cond, x * 2.0, y + 1.0), a, b)


class TestShapes:
    def test_matmul(self):
        a = RNG.normal(size=(3, 4))
        b = RNG.normal(size=(4, 2))
        check_grad(ad.matmul, a, b)

    def test_matmul_batched(self):
        a = RNG.normal(size=(5, 3, 4))
        b = RNG.normal(size=(4, 2))
        check_grad(ad.matmul, a, b)

    def test_sum_axis(self):
        a = RNG.normal(size=(3, 4, 2))
        check_grad(lambda x: ad.sum_(x, axis=1) * 2.0, a)

    def test_sum_keepdims(self):
        a = RNG.normal(size=(3, 4))
        check_grad(lambda x: x / ad.sum_(x * x, axis=-1, keepdims=True), a)

    def test_getitem(self):
        a = RNG.normal(size=(5, 4))
        check_grad(lambda x: x[1:4] * 3.0, a)

    def test_reshape_swapaxes(self):
        a = RNG.normal(size=(2, 6))
        check_grad(lambda x: ad.swapaxes(ad.reshape(x, (2, 3, 2)), 0, 1) ** 2, a)

    def test_expand_dims_concat(self):
        a = RNG.normal(size=(3,))
        b = RNG.normal(size=(3,))
        check_grad(
            lambda x, y: ad.concatenate([ad.expand_dims(x, 0), ad.expand_dims(y, 0)], axis=0) * 2.0,
            a,
            b,
        )

    def test_stack(self):
        a = RNG.normal(size=(2, 3))
        b = RNG.normal(size=(2, 3))
        check_grad(lambda x, y: ad.stack([x, y], axis=1) * 1.7, a, b)


class TestNeural:
    def test_conv1d(self):
        x = RNG.normal(size=(2, 3, 9))
        w = RNG.normal(size=(4, 3, 3))
        check_grad(ad.conv1d, x, w)

    def test_conv1d_bias(self):
        x = RNG.normal(size=(2, 3, 7))
        w = RNG.normal(size=(4, 3, 3))
        b = RNG.normal(size=(4,))
        check_grad(ad.conv1d, x, w, b)

    def test_conv1d_forward_bruteforce(self):
        x = RNG.normal(size=(1, 2, 6))
        w = RNG.normal(size=(3, 2, 3))
        out = ad.conv1d(ad.Tensor(x), ad.Tensor(w)).data
        ref = np.zeros((1, 3, 4))
        for o in range(3):
            for t in range(4):
                ref[0, o, t] = np.sum(x[0, :, t : t + 3] * w[o])
        np.testing.assert_allclose(out, ref, atol=1e-12)

    def test_maxpool1d(self):
        x = RNG.normal(size=(2, 3, 8))
        check_grad(lambda t: ad.maxpool1d(t, 2), x)

    def test_maxpool1d_ceil_odd_length(self):
        x = RNG.normal(size=(1, 1, 5))
        out = ad.maxpool1d(ad.Tensor(x), 2)
        assert out.data.shape == (1, 1, 3)
        np.testing.assert_allclose(out.data[0, 0, 2], x[0, 0, 4])
        check_grad(lambda t: ad.maxpool1d(t, 2), x)

    def test_norm_lastaxis(self):
        x = RNG.normal(size=(4, 3))
        check_grad(lambda t: ad.norm_lastaxis(t), x)

    def test_norm_lastaxis_zero_safe(self):
        x = ad.Tensor(np.zeros((2, 3)), requires_grad=True)
        out = ad.sum_(ad.norm_lastaxis(x))
        out.backward()
        assert np.all(np.isfinite(x.grad))
        assert float(out.data) == 0.0


class TestMechanics:
    def test_grad_accumulation(self):
        x = ad.Tensor(np.array([2.0]), requires_grad=True)
        y = x * x + x  # dy/dx = 2x + 1 = 5
        ad.sum_(y).backward()
        np.testing.assert_allclose(x.grad, [5.0])

    def test_no_grad_leaf(self):
        x = ad.Tensor(np.array([1.0]))
        y = ad.Tensor(np.array([2.0]), requires_grad=True)
        out = ad.sum_(x * y)
        out.backward()
        assert x.grad is None
        np.testing.assert_allclose(y.grad, [1.0])

    def test_diamond_graph(self):
        x = ad.Tensor(np.array([3.0]), requires_grad=True)
        a = x * 2.0
        b = x + 1.0
        out = ad.sum_(a * b)  # f = 2x(x+1), f' = 4x + 2 = 14
        out.backward()
        np.testing.assert_allclose(x.grad, [14.0])

    def test_nonfinite_grad_raises(self):
        # d(sqrt)/dx at 0 is infinite; the backward pass must refuse it
        x = ad.Tensor(np.array([0.0, 4.0]), requires_grad=True)
        y = ad.sum_(ad.sqrt(x))
        assert np.isfinite(float(y.data))
        with np.errstate(divide="ignore"), pytest.raises(NumericalFailureError):
            y.backward()

    def test_backward_needs_scalar_or_seed(self):
        x = ad.Tensor(np.ones((2, 2)), requires_grad=True)
        y = x * 3.0
        y.backward(np.ones((2, 2)))
        np.testing.assert_allclose(x.grad, np.full((2, 2), 3.0))


class TestGuardedSqrt:
    def test_forward_exact(self):
        x = np.array([0.0, 1e-30, 4.0])
        out = ad.sqrt_guarded(ad.Tensor(x)).data
        np.testing.assert_array_equal(out, np.sqrt(x))

    def test_gradient_finite_at_zero(self):
        x = ad.Tensor(np.array([0.0, 4.0]), requires_grad=True)
        ad.sum_(ad.sqrt_guarded(x)).backward()
        assert np.all(np.isfinite(x.grad))
        np.testing.assert_allclose(x.grad[1], 0.25)
