import numpy as np
import pytest

from gangs.neural import (
    ACTIVATIONS, Adam, Architecture, MlpNet, NetError, backward, forward,
    init_random, param_count)
from oracles import central_difference, max_relative_error


def hand_forward(net, x):
    """Loop-based forward pass written independently of the vectorized one."""
    sizes = net.arch.layer_sizes
    p = list(net.params)
    a = list(x)
    pos = 0
    for n_in, n_out, act in zip(sizes[:-1], sizes[1:], net.arch.activations):
        W = [[p[pos + i * n_out + j] for j in range(n_out)] for i in range(n_in)]
        pos += n_in * n_out
        b = p[pos:pos + n_out]
        pos += n_out
        out = []
        for j in range(n_out):
            z = b[j] + sum(a[i] * W[i][j] for i in range(n_in))
            if act == "relu":
                z = max(z, 0.0)
            elif act == "tanh":
                z = np.tanh(z)
            elif act == "sigmoid":
                z = 1.0 / (1.0 + np.exp(-z))
            out.append(z)
        a = out
    return np.array(a)


def test_zero_net_sigmoid_outputs_half():
    arch = Architecture.mlp(3, [4], 2, out_act="sigmoid")
    net = MlpNet(arch, np.zeros(param_count(arch)))
    assert np.all(forward(net, [1.0, -2.0, 5.0]) == 0.5)


def test_identity_linear_net():
    arch = Architecture((3, 3, 3), ("linear", "linear"))
    eye = np.eye(3).reshape(-1)
    net = MlpNet(arch, np.concatenate([eye, np.zeros(3), eye, np.zeros(3)]))
    x = np.array([0.1, -4.0, 2.5])
    assert np.array_equal(forward(net, x), x)


def test_forward_matches_hand_rolled_oracle():
    arch = Architecture.mlp(2, [4], 1, hidden_act="tanh", out_act="sigmoid")
    net = init_random(arch, seed=7)
    net = MlpNet(arch, net.params + np.random.default_rng(7).normal(0, 0.3, net.params.size))
    x = np.array([0.3, -0.7])
    assert abs(forward(net, x)[0] - hand_forward(net, x)[0]) < 1e-12


def test_forward_batch_equals_rows():
    net = init_random(Architecture.mlp(2, [8, 8], 3, hidden_act="tanh"), seed=1)
    X = np.random.default_rng(0).normal(size=(5, 2))
    out = forward(net, X)
    for i in range(5):
        np.testing.assert_allclose(out[i], forward(net, X[i]), rtol=0, atol=1e-15)


def test_forward_dimension_mismatch():
    net = init_random(Architecture.mlp(2, [3], 1), seed=0)
    with pytest.raises(NetError):
        forward(net, [1.0, 2.0, 3.0])
    with pytest.raises(NetError):
        backward(net, [1.0, 2.0], [1.0, 1.0])


def test_param_count_examples():
    assert param_count(Architecture.mlp(2, [16, 16], 2)) == 354
    assert param_count(Architecture((2, 1), ("linear",))) == 3


def test_linear_single_layer_gradient():
    arch = Architecture((3, 1), ("linear",))
    net = MlpNet(arch, [0.5, -1.0, 2.0, 0.3])
    x = np.array([1.5, -2.0, 0.25])
    g_params, g_input = backward(net, x, [1.0])
    np.testing.assert_array_equal(g_params, [1.5, -2.0, 0.25, 1.0])
    np.testing.assert_array_equal(g_input, [0.5, -1.0, 2.0])


def test_zero_upstream_zero_gradient():
    net = init_random(Architecture.mlp(2, [8], 2, hidden_act="tanh"), seed=5)
    g_params, g_input = backward(net, [0.3, 0.1], [0.0, 0.0])
    assert not g_params.any() and not g_input.any()


def _random_instance(rng, acts=None):
    n_layers = rng.integers(1, 4)
    sizes = [int(rng.integers(1, 7)) for _ in range(n_layers + 1)]
    acts = acts or [ACTIVATIONS[rng.integers(len(ACTIVATIONS))] for _ in range(n_layers)]
    arch = Architecture(sizes, acts)
    net = MlpNet(arch, rng.normal(0, 0.8, param_count(arch)))
    x = rng.normal(size=sizes[0])
    up = rng.normal(size=sizes[-1])
    return net, x, up


def check_gradients(net, x, up):
    g_params, g_input = backward(net, x, up)

    def f_params(p):
        return float(up @ forward(MlpNet(net.arch, p), x))

    def f_input(v):
        return float(up @ forward(net, v))

    err_p = max_relative_error(g_params, central_difference(f_params, net.params))
    err_x = max_relative_error(g_input, central_difference(f_input, x))
    return max(err_p, err_x)


@pytest.mark.parametrize("seed", range(50))
def test_gradients_random_architectures(seed):
    rng = np.random.default_rng(1000 + seed)
    net, x, up = _random_instance(rng, acts=None)
    assert check_gradients(net, x, up) < 1e-4


@pytest.mark.parametrize("act", ACTIVATIONS)
def test_gradients_2_8_8_1(act):
    rng = np.random.default_rng(ACTIVATIONS.index(act))
    arch = Architecture((2, 8, 8, 1), (act, act, "sigmoid"))
    net = MlpNet(arch, rng.normal(0, 0.8, param_count(arch)))
    assert check_gradients(net, rng.normal(size=2), np.array([1.0])) < 1e-4


def test_relu_derivative_at_zero_is_zero():
    arch = Architecture((1, 1), ("relu",))
    net = MlpNet(arch, [1.0, 0.0])
    g_params, g_input = backward(net, [0.0], [1.0])
    assert not g_params.any() and g_input[0] == 0.0


def test_init_random_determinism_and_bounds():
    arch = Architecture.mlp(8, [32, 32], 2)
    a, b = init_random(arch, 123), init_random(arch, 123)
    assert a.params.tobytes() == b.params.tobytes()
    assert not np.array_equal(a.params, init_random(arch, 124).params)
    bound = np.sqrt(6.0 / (8 + 32))
    for seed in range(1000):
        W, bias, _ = next(init_random(Architecture((8, 32), ("linear",)), seed).layers())
        assert np.abs(W).max() <= bound
        assert not bias.any()


def test_serialization_round_trip(tmp_path):
    net = init_random(Architecture.mlp(8, [32, 32], 2), 3)
    again = MlpNet.from_bytes(net.to_bytes())
    assert again.arch == net.arch
    assert again.params.tobytes() == net.params.tobytes()
    net.save(tmp_path / "n.mlp")
    assert MlpNet.load(tmp_path / "n.mlp").params.tobytes() == net.params.tobytes()


@pytest.mark.parametrize("cut", [0, 3, 11, -5])
def test_corrupt_bytes_rejected(cut):
    data = init_random(Architecture.mlp(2, [4], 1), 0).to_bytes()
    with pytest.raises(NetError):
        MlpNet.from_bytes(data[:cut] if cut else b"XXXX" + data[4:])


def test_adam_minimizes_quadratic():
    opt = Adam(lr=0.05)
    p = np.array([3.0, -2.0])
    for _ in range(2000):
        p = opt.step(p, 2 * p)
    assert np.abs(p).max() < 1e-3
