"""Dense and LSTM layers with hand-written backward passes.

All arrays are float64. Inputs may be a single vector ``(n,)`` or a batch
``(B, n)``; outputs keep the caller's rank.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DimensionError

ACTIVATIONS = ("tanh", "sigmoid", "identity")


def sigmoid(z):
    # tanh form avoids overflow warnings for large |z|
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _activate(name, z):
    if name == "tanh":
        return np.tanh(z)
    if name == "sigmoid":
        return sigmoid(z)
    return z


def _activation_grad(name, y):
    """Derivative of the activation expressed through its output."""
    if name == "tanh":
        return 1.0 - y * y
    if name == "sigmoid":
        return y * (1.0 - y)
    return None


def uniform_init(rng, shape, fan_in):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def _as_batch(x, size, what):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim not in (1, 2) or x.shape[-1] != size:
        raise DimensionError(f"{what}: expected trailing size {size}, got shape {x.shape}")
    return np.atleast_2d(x), x.ndim == 1


class Dense:
    """Affine map followed by an elementwise activation.

    ``weight`` has shape ``(out, in)`` and ``bias`` shape ``(out,)``.
    """

    def __init__(self, n_in, n_out, activation="identity", rng=None, weight=None, bias=None):
        if activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {activation!r}")
        self.activation = activation
        if weight is None:
            rng = rng if rng is not None else np.random.default_rng(0)
            weight = uniform_init(rng, (n_out, n_in), n_in)
            bias = uniform_init(rng, (n_out,), n_in) if bias is None else bias
        weight = np.array(weight, dtype=np.float64)
        bias = np.zeros(n_out) if bias is None else np.array(bias, dtype=np.float64)
        if weight.shape != (n_out, n_in) or bias.shape != (n_out,):
            raise DimensionError(
                f"dense parameters {weight.shape}/{bias.shape} do not match ({n_out}, {n_in})"
            )
        self.params = {"weight": weight, "bias": bias}

    @property
    def weight(self):
        return self.params["weight"]

    @property
    def bias(self):
        return self.params["bias"]

    @property
    def n_in(self):
        return self.weight.shape[1]

    @property
    def n_out(self):
        return self.weight.shape[0]

    def forward(self, x):
        xb, squeeze = _as_batch(x, self.n_in, "dense input")
        y = _activate(self.activation, xb @ self.weight.T + self.bias)
        cache = DenseCache(self, xb, y, squeeze)
        return (y[0] if squeeze else y), cache

    def copy(self):
        return Dense(self.n_in, self.n_out, self.activation,
                     weight=self.weight.copy(), bias=self.bias.copy())


@dataclass
class DenseCache:
    layer: Dense
    x: np.ndarray
    y: np.ndarray
    squeeze: bool

    def activations(self):
        return (self.x, self.y)


def dense_forward(layer, x):
    return layer.forward(x)


def dense_backward(cache, dy):
    """Return ``(dx, dW, db)`` for the forward pass recorded in ``cache``."""
    layer = cache.layer
    dy = np.asarray(dy, dtype=np.float64)
    dyb = np.atleast_2d(dy)
    if dyb.shape != cache.y.shape:
        raise DimensionError(f"upstream gradient {dy.shape} does not match output {cache.y.shape}")
    d = _activation_grad(layer.activation, cache.y)
    dz = dyb if d is None else dyb * d
    dW = dz.T @ cache.x
    db = dz.sum(axis=0)
    dx = dz @ layer.weight
    return (dx[0] if cache.squeeze else dx), dW, db


class LstmCell:
    """Single LSTM cell.

    The four gate blocks (input, forget, output, candidate) are stored
    stacked in that order: ``weight`` is ``(4H, I + H)`` acting on the
    concatenation ``[x, h]``.
    """

    GATES = ("input", "forget", "output", "candidate")

    def __init__(self, n_input, n_hidden, rng=None, weight=None, bias=None):
        self.n_input = int(n_input)
        self.n_hidden = int(n_hidden)
        shape = (4 * self.n_hidden, self.n_input + self.n_hidden)
        if weight is None:
            rng = rng if rng is not None else np.random.default_rng(0)
            fan_in = self.n_input + self.n_hidden
            weight = uniform_init(rng, shape, fan_in)
            bias = uniform_init(rng, (shape[0],), fan_in) if bias is None else bias
        weight = np.array(weight, dtype=np.float64)
        bias = np.zeros(shape[0]) if bias is None else np.array(bias, dtype=np.float64)
        if weight.shape != shape or bias.shape != (shape[0],):
            raise DimensionError(f"lstm parameters {weight.shape}/{bias.shape}, expected {shape}")
        self.params = {"weight": weight, "bias": bias}

    @property
    def weight(self):
        return self.params["weight"]

    @property
    def bias(self):
        return self.params["bias"]

    def gate(self, name):
        """Views ``(W_gate, b_gate)`` of one gate block."""
        k = self.GATES.index(name)
        H = self.n_hidden
        return self.weight[k * H:(k + 1) * H], self.bias[k * H:(k + 1) * H]

    def copy(self):
        return LstmCell(self.n_input, self.n_hidden,
                        weight=self.weight.copy(), bias=self.bias.copy())

    def step(self, x, h, c):
        return lstm_step(self, x, h, c)


@dataclass
class LstmCache:
    cell: LstmCell
    xh: np.ndarray
    i: np.ndarray
    f: np.ndarray
    o: np.ndarray
    g: np.ndarray
    c_prev: np.ndarray
    tanh_c: np.ndarray
    squeeze: bool

    def activations(self):
        return (self.xh, self.i, self.f, self.o, self.g, self.c_prev, self.tanh_c)


def lstm_step(cell, x, h, c):
    """One LSTM update; returns ``(h_next, c_next, cache)``."""
    xb, squeeze = _as_batch(x, cell.n_input, "lstm input")
    hb, _ = _as_batch(h, cell.n_hidden, "lstm hidden state")
    cb, _ = _as_batch(c, cell.n_hidden, "lstm cell state")
    if not (xb.shape[0] == hb.shape[0] == cb.shape[0]):
        raise DimensionError("lstm batch sizes differ")
    H = cell.n_hidden
    xh = np.concatenate([xb, hb], axis=1)
    z = xh @ cell.weight.T + cell.bias
    i = sigmoid(z[:, :H])
    f = sigmoid(z[:, H:2 * H])
    o = sigmoid(z[:, 2 * H:3 * H])
    g = np.tanh(z[:, 3 * H:])
    c_next = f * cb + i * g
    tanh_c = np.tanh(c_next)
    h_next = o * tanh_c
    cache = LstmCache(cell, xh, i, f, o, g, cb, tanh_c, squeeze)
    if squeeze:
        return h_next[0], c_next[0], cache
    return h_next, c_next, cache


def lstm_step_backward(cache, dh_next, dc_next):
    """Backward pass of :func:`lstm_step`.

    Returns ``(dx, dh_prev, dc_prev, dW, db)``.
    """
    cell = cache.cell
    H = cell.n_hidden
    dh = np.atleast_2d(dh_next)
    dc = np.atleast_2d(dc_next) + dh * cache.o * (1.0 - cache.tanh_c ** 2)
    do = dh * cache.tanh_c
    di = dc * cache.g
    dg = dc * cache.i
    df = dc * cache.c_prev
    dc_prev = dc * cache.f
    dz = np.concatenate([
        di * cache.i * (1.0 - cache.i),
        df * cache.f * (1.0 - cache.f),
        do * cache.o * (1.0 - cache.o),
        dg * (1.0 - cache.g ** 2),
    ], axis=1)
    dW = dz.T @ cache.xh
    db = dz.sum(axis=0)
    dxh = dz @ cell.weight
    dx, dh_prev = dxh[:, :cell.n_input], dxh[:, cell.n_input:]
    if cache.squeeze:
        return dx[0], dh_prev[0], dc_prev[0], dW, db
    return dx, dh_prev, dc_prev, dW, db
