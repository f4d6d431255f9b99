"""Tests for kernels, reverse-mode gradients, gradient checking, and the optimizer."""

import numpy as np
import pytest

from topicseg.errors import NumericalError, ShapeError
from topicseg.numerics import (
    Adam,
    Graph,
    OptimizerState,
    Tensor,
    adam_step,
    backward,
    clip_global_norm,
    forward_kernel,
    grad_check,
    seeded_init,
)
from topicseg.numerics import kernels as K


class TestForwardKernels:
    def test_matmul(self):
        out = forward_kernel("matmul", [np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([[1.0], [1.0]])])
        np.testing.assert_array_equal(out.data, [[3.0], [7.0]])

    def test_softmax_symmetric(self):
        out = forward_kernel("softmax", [np.array([0.0, 0.0])])
        np.testing.assert_allclose(out.data, [0.5, 0.5])

    def test_sigmoid_zero(self):
        assert forward_kernel("sigmoid", [np.array(0.0)]).item() == pytest.approx(0.5)

    def test_matmul_shape_error_names_kernel_and_shapes(self):
        with pytest.raises(ShapeError, match=r"matmul.*\(2, 3\).*\(2, 3\)"):
            K.matmul(np.ones((2, 3)), np.ones((2, 3)))

    def test_unknown_kernel(self):
        with pytest.raises(ValueError, match="Unknown kernel"):
            forward_kernel("conv", [np.ones(2)])

    def test_softmax_sums_to_one(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            x = rng.normal(scale=50.0, size=7).astype(np.float32)
            assert float(K.softmax(x).data.sum()) == pytest.approx(1.0, abs=1e-6)

    def test_kernels_are_deterministic(self):
        rng = np.random.default_rng(1)
        a, b = rng.normal(size=(4, 5)), rng.normal(size=(5, 3))
        first = K.gelu(K.matmul(a, b)).data
        second = K.gelu(K.matmul(a, b)).data
        assert np.array_equal(first, second)

    def test_dtype_preserved(self):
        x = Tensor(np.ones(3, dtype=np.float64))
        assert K.mul(x, 2.0).data.dtype == np.float64
        assert K.mul(Tensor(np.ones(3, dtype=np.float32)), 2.0).data.dtype == np.float32

    def test_log_rejects_non_positive(self):
        with pytest.raises(NumericalError):
            K.log(np.array([1.0, 0.0]))

    def test_gather_range_check(self):
        with pytest.raises(ShapeError, match="gather"):
            K.gather(np.ones((3, 2)), np.array([0, 3]))

    def test_attention_masked_keys_get_no_weight(self):
        rng = np.random.default_rng(2)
        q, k, v = rng.normal(size=(1, 3, 4)), rng.normal(size=(1, 3, 4)), rng.normal(size=(1, 3, 4))
        keep = np.array([True, True, False])
        masked = K.attention(q, k, v, keep_mask=keep).data
        unmasked = K.attention(q, k[:, :2], v[:, :2]).data
        np.testing.assert_allclose(masked, unmasked, atol=1e-6)


class TestBackward:
    def test_square_sum(self):
        graph = Graph()
        x = graph.param("x", np.array([1.0, 2.0]))
        grads = backward(graph, K.sum_(K.mul(x, x)))
        np.testing.assert_allclose(grads["x"], [2.0, 4.0])

    def test_sigmoid_derivative_at_zero(self):
        graph = Graph()
        z = graph.param("z", np.array([0.0]))
        grads = backward(graph, K.sum_(K.sigmoid(z)))
        assert grads["z"][0] == pytest.approx(0.25)

    def test_unreached_leaf_gets_zero(self):
        graph = Graph()
        x = graph.param("x", np.array([1.0, 2.0]))
        graph.param("unused", np.ones((2, 2)))
        grads = backward(graph, K.sum_(x))
        np.testing.assert_array_equal(grads["unused"], np.zeros((2, 2)))

    def test_non_scalar_loss(self):
        graph = Graph()
        x = graph.param("x", np.ones(3))
        with pytest.raises(ShapeError, match="scalar"):
            backward(graph, K.mul(x, 2.0))

    def test_duplicate_param_name(self):
        graph = Graph()
        graph.param("w", np.ones(2))
        with pytest.raises(ValueError, match="Duplicate"):
            graph.param("w", np.ones(2))

    def test_matmul_chain_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        params = {"a": rng.normal(size=(2, 2)), "b": rng.normal(size=(2, 2))}

        def f(t):
            return K.sum_(K.tanh(K.matmul(K.matmul(t["a"], t["b"]), t["a"])))

        assert grad_check(f, params) < 1e-4


# Every differentiable kernel, each reduced to a scalar for checking
KERNEL_CASES = {
    "add": (lambda t: K.sum_(K.add(t["x"], t["y"])), {"x": (3, 2), "y": (2,)}),
    "sub": (lambda t: K.sum_(K.mul(K.sub(t["x"], t["y"]), t["x"])), {"x": (2, 3), "y": (2, 3)}),
    "mul": (lambda t: K.sum_(K.mul(t["x"], t["y"])), {"x": (2, 3), "y": (1, 3)}),
    "pow": (lambda t: K.sum_(K.pow_(K.add(K.mul(t["x"], t["x"]), 1.0), 2.5)), {"x": (4,)}),
    "matmul": (lambda t: K.sum_(K.matmul(t["x"], t["y"])), {"x": (2, 3, 4), "y": (4, 2)}),
    "concat": (lambda t: K.sum_(K.mul(K.concat([t["x"], t["y"]], axis=1), 1.5)),
               {"x": (2, 3), "y": (2, 2)}),
    "stack": (lambda t: K.sum_(K.tanh(K.stack([t["x"], t["y"]], axis=1))),
              {"x": (2, 3), "y": (2, 3)}),
    "slice": (lambda t: K.sum_(K.tanh(t["x"][:, 1:3])), {"x": (3, 4)}),
    "reshape": (lambda t: K.sum_(K.tanh(K.reshape(t["x"], (3, 2)))), {"x": (2, 3)}),
    "transpose": (lambda t: K.sum_(K.matmul(K.transpose(t["x"], (1, 0)), t["y"])),
                  {"x": (2, 3), "y": (2, 2)}),
    "gather": (lambda t: K.sum_(K.tanh(K.gather(t["x"], np.array([0, 2, 2])))), {"x": (4, 3)}),
    "sigmoid": (lambda t: K.sum_(K.sigmoid(t["x"])), {"x": (5,)}),
    "tanh": (lambda t: K.sum_(K.tanh(t["x"])), {"x": (5,)}),
    "gelu": (lambda t: K.sum_(K.gelu(t["x"])), {"x": (5,)}),
    "softmax": (lambda t: K.sum_(K.mul(K.softmax(t["x"], axis=-1), t["y"])),
                {"x": (2, 4), "y": (2, 4)}),
    "log": (lambda t: K.sum_(K.log(K.add(K.mul(t["x"], t["x"]), 0.5))), {"x": (4,)}),
    "max": (lambda t: K.sum_(K.max_(t["x"], axis=1)), {"x": (3, 4)}),
    "mean": (lambda t: K.mean(K.tanh(t["x"])), {"x": (3, 4)}),
    "layer_norm": (lambda t: K.sum_(K.mul(K.layer_norm(t["x"], t["g"], t["b"]), t["y"])),
                   {"x": (2, 5), "g": (5,), "b": (5,), "y": (2, 5)}),
    "attention": (lambda t: K.sum_(K.mul(K.attention(t["q"], t["k"], t["v"],
                                                     np.array([True, True, False])), t["y"])),
                  {"q": (2, 3, 4), "k": (2, 3, 4), "v": (2, 3, 4), "y": (2, 3, 4)}),
    "clip": (lambda t: K.sum_(K.mul(K.clip(t["x"], -0.5, 0.5), t["x"])), {"x": (6,)}),
}


class TestGradCheck:
    @pytest.mark.parametrize("kind", sorted(KERNEL_CASES))
    def test_kernel_gradients(self, kind):
        function, shapes = KERNEL_CASES[kind]
        rng = np.random.default_rng(sorted(KERNEL_CASES).index(kind))
        params = {name: rng.normal(size=shape) for name, shape in shapes.items()}
        if kind == "clip":
            # Keep every coordinate away from the clip corners
            params["x"] = np.array([-1.2, -0.3, 0.1, 0.25, 0.9, 1.4])
        assert grad_check(function, params) < 1e-3

    def test_quadratic_is_exact(self):
        params = {"x": np.random.default_rng(5).normal(size=6)}
        assert grad_check(lambda t: K.sum_(K.mul(t["x"], t["x"])), params) < 1e-5

    def test_tied_max_can_report_large_error(self):
        # The max is not differentiable at a tie; one-sided slopes disagree
        params = {"x": np.array([[1.0, 1.0]])}
        assert grad_check(lambda t: K.sum_(K.max_(t["x"], axis=1)), params) > 0.1

    def test_non_finite_function(self):
        def f(t):
            return K.sum_(K.mul(t["x"], np.inf))

        with pytest.raises(NumericalError):
            grad_check(f, {"x": np.ones(2)})

    def test_epsilon_must_be_positive(self):
        with pytest.raises(ValueError):
            grad_check(lambda t: K.sum_(t["x"]), {"x": np.ones(2)}, epsilon=0.0)


class TestAdam:
    def test_first_step_moves_by_learning_rate(self):
        params = {"w": np.array([0.0])}
        adam_step(params, {"w": np.array([1.0])}, OptimizerState(), lr=0.1)
        assert abs(params["w"][0] + 0.1) < 1e-6

    def test_zero_gradient_is_noop(self):
        params = {"w": np.array([1.0, -2.0])}
        adam_step(params, {"w": np.zeros(2)}, OptimizerState(), lr=0.1)
        np.testing.assert_array_equal(params["w"], [1.0, -2.0])

    def test_two_steps_match_hand_recurrence(self):
        lr, b1, b2, eps = 0.1, 0.9, 0.999, 1e-8
        params = {"w": np.array([0.0])}
        state = OptimizerState()
        deltas = []
        for _ in range(2):
            before = params["w"][0]
            adam_step(params, {"w": np.array([1.0])}, state, lr, b1, b2, eps)
            deltas.append(params["w"][0] - before)

        m = v = 0.0
        expected = []
        for t in (1, 2):
            m = b1 * m + (1 - b1)
            v = b2 * v + (1 - b2)
            expected.append(-lr * (m / (1 - b1 ** t)) / (np.sqrt(v / (1 - b2 ** t)) + eps))
        np.testing.assert_allclose(deltas, expected, atol=1e-8)
        assert state.step_count == 2

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            adam_step({"w": np.zeros(2)}, {"w": np.zeros(3)}, OptimizerState())

    def test_invalid_learning_rate(self):
        with pytest.raises(ValueError):
            adam_step({"w": np.zeros(2)}, {"w": np.zeros(2)}, OptimizerState(), lr=0.0)

    def test_clip_global_norm(self):
        grads = {"a": np.array([3.0]), "b": np.array([4.0])}
        assert clip_global_norm(grads, 1.0) == pytest.approx(5.0)
        total = np.sqrt(grads["a"][0] ** 2 + grads["b"][0] ** 2)
        assert total == pytest.approx(1.0, rel=1e-6)

    def test_wrapper_clips_then_steps(self):
        params = {"w": np.array([0.0, 0.0])}
        optimizer = Adam(lr=0.01, clip_norm=1.0)
        norm = optimizer.step(params, {"w": np.array([30.0, 40.0])})
        assert norm == pytest.approx(50.0)
        assert optimizer.state.step_count == 1


class TestSeededInit:
    def test_deterministic(self):
        a = seeded_init((3, 4), "uniform", seed=7, bound=0.1)
        b = seeded_init((3, 4), "uniform", seed=7, bound=0.1)
        assert np.array_equal(a, b)

    def test_zeros(self):
        assert not np.any(seeded_init((2, 2), "zeros", seed=1))

    def test_uniform_bound(self):
        values = seeded_init((50, 50), "uniform", seed=3, bound=0.1)
        assert values.dtype == np.float32
        assert np.all(np.abs(values) <= np.float32(0.1))

    def test_zero_size_shape(self):
        with pytest.raises(ShapeError):
            seeded_init((0, 3), "uniform", seed=0)
