import numpy as np
import pytest

from neurontrim import (
    DropoutSpec,
    Layer,
    Network,
    forward,
    forward_train,
    init_network,
    make_rng,
)
from neurontrim.errors import ArgumentError, DimensionError
from neurontrim.network import activate


def tiny_net(w1, b1, w2, b2, act="linear"):
    return Network([
        Layer(np.array([[w1]]), np.array([b1]), act),
        Layer(np.array([[w2]]), np.array([b2]), act),
    ])


class TestForward:
    def test_hand_example(self):
        net = tiny_net(2.0, 1.0, 3.0, 0.0)
        out = forward(net, np.array([[1.0]]))
        assert out[0, 0] == 9.0  # (1*2 + 1) * 3

    def test_empty_batch(self):
        net = init_network(make_rng(0), [4, 3, 2], ["relu", "linear"])
        out = forward(net, np.zeros((0, 4)))
        assert out.shape == (0, 2)

    def test_reference_net_composite_product(self, reference_net):
        x = np.zeros((1, 20))
        x[0, 2] = 1.0  # indicator of feature 3 (1-based)
        out = forward(reference_net, x)
        np.testing.assert_allclose(out[0, 0], 3.8427524171, rtol=1e-10)

    def test_zero_net_maps_to_zero(self):
        net = Network([Layer(np.zeros((3, 2)), np.zeros(2), "linear")])
        x = make_rng(1).standard_normal((5, 3))
        assert np.array_equal(forward(net, x), np.zeros((5, 2)))

    def test_shape_mismatch(self):
        net = init_network(make_rng(0), [4, 2], ["linear"])
        with pytest.raises(DimensionError):
            forward(net, np.zeros((1, 5)))


class TestActivations:
    def test_logistic_strictly_inside_unit_interval(self):
        z = np.array([[-1e3, -50.0, 0.0, 50.0, 1e3]])
        a = activate("logistic", z)
        assert np.all(a > 0.0) and np.all(a < 1.0)
        np.testing.assert_allclose(a[0, 2], 0.5)

    def test_relu_clamps_negatives(self):
        z = np.array([[-2.0, 0.0, 3.0]])
        assert np.array_equal(activate("relu", z), np.array([[0.0, 0.0, 3.0]]))

    def test_unknown_activation(self):
        with pytest.raises(ArgumentError):
            activate("tanh", np.zeros((1, 1)))


class TestForwardTrain:
    def test_keep_prob_one_is_bitwise_forward(self):
        net = init_network(make_rng(3), [6, 4, 2], ["logistic", "linear"])
        x = make_rng(4).standard_normal((7, 6))
        spec = DropoutSpec(1.0, frozenset({0, 1}))
        out, masks = forward_train(net, x, spec, make_rng(5))
        assert np.array_equal(out, forward(net, x))
        assert all(np.all(m == 1.0) for m in masks.values())

    def test_half_keep_doubles_or_zeroes(self):
        net = Network([
            Layer(np.eye(3), np.zeros(3), "linear"),
            Layer(np.eye(3), np.zeros(3), "linear"),
        ])
        x = np.array([[1.0, 2.0, 3.0]])
        spec = DropoutSpec(0.5, frozenset({1}))
        out, masks = forward_train(net, x, spec, make_rng(0))
        expected = x * masks[1] * 2.0
        assert np.array_equal(out, expected)
        assert set(np.unique(out)) <= {0.0, 2.0, 4.0, 6.0}

    def test_masked_activation_is_unbiased(self):
        net = init_network(make_rng(7), [2, 3, 1], ["linear", "linear"])
        x = np.array([[0.8, -1.3]])
        baseline = forward(net, x)[0, 0]
        rng = make_rng(8)
        spec = DropoutSpec(0.5, frozenset({1}))
        draws = np.array([forward_train(net, x, spec, rng)[0][0, 0] for _ in range(10_000)])
        assert abs(draws.mean() - baseline) <= 0.05 * abs(baseline)

    def test_stage_out_of_range(self):
        net = init_network(make_rng(0), [2, 2], ["linear"])
        with pytest.raises(ArgumentError):
            forward_train(net, np.zeros((1, 2)), DropoutSpec(0.5, frozenset({1})), make_rng(0))

    def test_keep_prob_validation(self):
        with pytest.raises(ArgumentError):
            DropoutSpec(0.0)
        with pytest.raises(ArgumentError):
            DropoutSpec(1.5)


class TestInitNetwork:
    def test_shapes_for_sparse_regression_architecture(self):
        net = init_network(make_rng(1), [20, 5, 1], ["linear", "linear"])
        assert [l.weights.shape for l in net.layers] == [(20, 5), (5, 1)]
        assert [l.biases.shape for l in net.layers] == [(5,), (1,)]
        assert all(np.all(l.biases == 0) for l in net.layers)

    def test_autoencoder_architecture(self):
        dims = [784, 128, 64, 128, 784]
        net = init_network(make_rng(1), dims, ["logistic"] * 4)
        assert net.dims == dims
        assert len(net.layers) == 4

    def test_glorot_bounds(self):
        net = init_network(make_rng(2), [10, 30], ["linear"])
        limit = np.sqrt(6.0 / 40.0)
        w = net.layers[0].weights
        assert np.all(np.abs(w) <= limit)
        assert np.abs(w).max() > 0.5 * limit  # actually fills the range

    def test_deterministic(self):
        a = init_network(make_rng(9), [4, 3, 2], ["relu", "linear"])
        b = init_network(make_rng(9), [4, 3, 2], ["relu", "linear"])
        for la, lb in zip(a.layers, b.layers):
            assert np.array_equal(la.weights, lb.weights)

    def test_validation(self):
        with pytest.raises(DimensionError):
            init_network(make_rng(0), [5], [])
        with pytest.raises(DimensionError):
            init_network(make_rng(0), [5, 2], ["linear", "linear"])


class TestStructuralValidation:
    def test_layer_bias_mismatch(self):
        with pytest.raises(DimensionError):
            Layer(np.zeros((2, 3)), np.zeros(2))

    def test_network_conformability(self):
        good = Layer(np.zeros((2, 3)), np.zeros(3))
        bad = Layer(np.zeros((4, 1)), np.zeros(1))
        with pytest.raises(DimensionError):
            Network([good, bad])

    def test_copy_is_deep(self):
        net = init_network(make_rng(0), [2, 2], ["linear"])
        clone = net.copy()
        clone.layers[0].weights[0, 0] += 1.0
        assert net.layers[0].weights[0, 0] != clone.layers[0].weights[0, 0]
