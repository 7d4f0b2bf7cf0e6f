"""Small fully connected networks with hand-written backpropagation.

A network is an :class:`Architecture` plus one flat parameter vector.  The
canonical parameter order is layer-major; within a layer the weight matrix of
shape ``(fan_in, fan_out)`` comes first in row-major order, followed by the
``fan_out`` biases.  A layer computes ``act(x @ W + b)``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

ACTIVATIONS = ("relu", "tanh", "sigmoid", "linear")

_MAGIC = b"MLPN"
_FORMAT_VERSION = 1


class NetError(ValueError):
    pass


@dataclass(frozen=True)
class Architecture:
    layer_sizes: tuple
    activations: tuple

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        acts = tuple(self.activations)
        if len(sizes) < 2:
            raise NetError("need at least one weight layer")
        if any(s < 1 for s in sizes):
            raise NetError(f"layer sizes must be positive: {sizes}")
        if len(acts) != len(sizes) - 1:
            raise NetError(f"{len(sizes) - 1} layers but {len(acts)} activations")
        for a in acts:
            if a not in ACTIVATIONS:
                raise NetError(f"unknown activation {a!r}")
        object.__setattr__(self, "layer_sizes", sizes)
        object.__setattr__(self, "activations", acts)

    @classmethod
    def mlp(cls, n_in, hidden, n_out, hidden_act="relu", out_act="linear"):
        sizes = (n_in, *hidden, n_out)
        return cls(sizes, (hidden_act,) * len(hidden) + (out_act,))

    @property
    def n_in(self):
        return self.layer_sizes[0]

    @property
    def n_out(self):
        return self.layer_sizes[-1]


def param_count(arch: Architecture) -> int:
    s = arch.layer_sizes
    return sum(a * b + b for a, b in zip(s[:-1], s[1:]))


@dataclass(frozen=True, eq=False)
class MlpNet:
    arch: Architecture
    params: np.ndarray

    def __post_init__(self):
        params = np.array(self.params, dtype=np.float64).reshape(-1)
        if params.size != param_count(self.arch):
            raise NetError(f"expected {param_count(self.arch)} parameters, got {params.size}")
        if not np.all(np.isfinite(params)):
            raise NetError("non-finite parameters")
        params.setflags(write=False)
        object.__setattr__(self, "params", params)

    def layers(self, params=None):
        """Yield ``(W, b, activation)`` views into ``params`` (defaults to own)."""
        flat = self.params if params is None else params
        offset = 0
        sizes = self.arch.layer_sizes
        for n_in, n_out, act in zip(sizes[:-1], sizes[1:], self.arch.activations):
            W = flat[offset:offset + n_in * n_out].reshape(n_in, n_out)
            offset += n_in * n_out
            b = flat[offset:offset + n_out]
            offset += n_out
            yield W, b, act

    def __call__(self, x):
        return forward(self, x)

    def to_bytes(self) -> bytes:
        sizes = self.arch.layer_sizes
        head = _MAGIC + struct.pack("<HI", _FORMAT_VERSION, len(sizes))
        head += struct.pack(f"<{len(sizes)}I", *sizes)
        head += bytes(ACTIVATIONS.index(a) for a in self.arch.activations)
        return head + self.params.astype("<f8").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "MlpNet":
        try:
            if data[:4] != _MAGIC:
                raise NetError("bad magic")
            version, n = struct.unpack_from("<HI", data, 4)
            if version != _FORMAT_VERSION:
                raise NetError(f"unsupported format version {version}")
            offset = 10
            sizes = struct.unpack_from(f"<{n}I", data, offset)
            offset += 4 * n
            acts = tuple(ACTIVATIONS[i] for i in data[offset:offset + n - 1])
            offset += n - 1
            arch = Architecture(sizes, acts)
            body = data[offset:]
            if len(body) != 8 * param_count(arch):
                raise NetError("parameter block has the wrong length")
            params = np.frombuffer(body, dtype="<f8").astype(np.float64)
        except (struct.error, IndexError) as exc:
            raise NetError(f"corrupt network data: {exc}") from None
        return cls(arch, params)

    def save(self, path):
        with open(path, "wb") as f:
            f.write(self.to_bytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as f:
            return cls.from_bytes(f.read())


def _activate(z, act):
    if act == "relu":
        return np.maximum(z, 0.0)
    if act == "tanh":
        return np.tanh(z)
    if act == "sigmoid":
        # split by sign to stay overflow free
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
        return out
    return z


def _activation_grad(z, a, act):
    if act == "relu":
        return (z > 0).astype(z.dtype)
    if act == "tanh":
        return 1.0 - a * a
    if act == "sigmoid":
        return a * (1.0 - a)
    return None


def _as_batch(net, x):
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.ndim != 2 or X.shape[1] != net.arch.n_in:
        raise NetError(f"input has shape {x.shape}, network expects {net.arch.n_in} features")
    return X, single


def forward_cached(net: MlpNet, X: np.ndarray, params=None):
    """Batched forward pass returning the output and the cache for :func:`backward_cached`."""
    cache = [X]
    a = X
    for W, b, act in net.layers(params):
        z = a @ W + b
        a = _activate(z, act)
        cache.append((z, a))
    return a, cache


def backward_cached(net: MlpNet, cache, upstream: np.ndarray, params=None):
    """Gradient of ``sum(upstream * output)`` w.r.t. the parameters and the inputs."""
    layers = list(net.layers(params))
    grads = []
    delta = upstream
    for li in range(len(layers) - 1, -1, -1):
        W, _, act = layers[li]
        z, a = cache[li + 1]
        d = _activation_grad(z, a, act)
        if d is not None:
            delta = delta * d
        a_prev = cache[li][1] if li > 0 else cache[0]
        grads.append(delta.sum(axis=0))
        grads.append((a_prev.T @ delta).reshape(-1))
        delta = delta @ W.T
    grads.reverse()
    return np.concatenate(grads), delta


def forward(net: MlpNet, x) -> np.ndarray:
    """Deterministic forward pass for one input vector or a batch of row vectors."""
    X, single = _as_batch(net, x)
    out, _ = forward_cached(net, X)
    return out[0] if single else out


def backward(net: MlpNet, x, upstream):
    """Exact gradients of ``<upstream, forward(net, x)>``.

    Returns ``(param_grad, input_grad)``.  For a batch, ``upstream`` has one
    row per input and the parameter gradient is summed over the batch.
    """
    X, single = _as_batch(net, x)
    U = np.asarray(upstream, dtype=np.float64)
    U = U[None, :] if U.ndim == 1 else U
    if U.shape != (X.shape[0], net.arch.n_out):
        raise NetError(f"upstream has shape {np.shape(upstream)}, expected output dim {net.arch.n_out}")
    _, cache = forward_cached(net, X)
    g_params, g_input = backward_cached(net, cache, U)
    return g_params, (g_input[0] if single else g_input)


def init_random(arch: Architecture, seed) -> MlpNet:
    """Xavier-uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    chunks = []
    for n_in, n_out in zip(arch.layer_sizes[:-1], arch.layer_sizes[1:]):
        bound = np.sqrt(6.0 / (n_in + n_out))
        chunks.append(rng.uniform(-bound, bound, size=n_in * n_out))
        chunks.append(np.zeros(n_out))
    return MlpNet(arch, np.concatenate(chunks))


class Adam:
    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = self.v = None
        self.t = 0

    def step(self, params, grad):
        """Return updated params moving against ``grad`` (minimization)."""
        if self.m is None:
            self.m = np.zeros_like(params)
            self.v = np.zeros_like(params)
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1 ** self.t)
        v_hat = self.v / (1 - self.beta2 ** self.t)
        return params - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class Sgd:
    def __init__(self, lr=1e-2):
        self.lr = lr

    def step(self, params, grad):
        return params - self.lr * grad
