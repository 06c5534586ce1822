"""Latent dynamics models and autoregressive rollout.

Every model maps a window of ``k_in`` latents to the next ``k_out``
latents. Windows are arrays shaped ``(k_in, m)`` for a single sample or
``(B, k_in, m)`` for a batch; the one-step model additionally accepts a
bare latent vector ``(m,)``.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError
from .nn import Dense, LstmCell, dense_backward, lstm_step, lstm_step_backward


def _as_window_batch(window, k, m):
    w = np.asarray(window, dtype=np.float64)
    if w.ndim == 2:
        w, squeeze = w[None], True
    elif w.ndim == 3:
        squeeze = False
    else:
        raise DimensionError(f"window must have 2 or 3 dims, got {w.shape}")
    if w.shape[1:] != (k, m):
        raise DimensionError(f"window shape {w.shape[1:]} does not match ({k}, {m})")
    return w, squeeze


class _Model:
    kind = ""
    k_in = 1
    k_out = 1

    def parameter_count(self):
        return sum(p.size for p in self.params.values())

    def fingerprint(self):
        h = hashlib.sha1()
        for name in sorted(self.params):
            h.update(name.encode())
            h.update(np.ascontiguousarray(self.params[name]).tobytes())
        return h.hexdigest()[:16]

    def load_params(self, values):
        """Overwrite parameters in place (keeps optimizer references valid)."""
        for name, p in self.params.items():
            v = np.asarray(values[name], dtype=np.float64)
            if v.shape != p.shape:
                raise DimensionError(f"{name}: {v.shape} vs {p.shape}")
            np.copyto(p, v)

    def __call__(self, window):
        return self.forward(window)[0]


@dataclass
class MlpCache:
    layers: list
    squeeze: bool

    def activations(self):
        return tuple(c for c in self.layers)


class OneStepMlp(_Model):
    """Stack of dense layers predicting ``eta_{t+1}`` from ``eta_t``.

    Hidden layers use ``activation``; the final layer is linear.
    """

    kind = "one_step_mlp"

    def __init__(self, m, hidden=(), activation="tanh", rng=None, layers=None):
        self.m = int(m)
        if layers is None:
            rng = rng if rng is not None else np.random.default_rng(0)
            sizes = [self.m, *hidden, self.m]
            layers = []
            for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
                act = "identity" if i == len(sizes) - 2 else activation
                layers.append(Dense(a, b, act, rng=rng))
        self.layers = list(layers)
        self.hidden = tuple(l.n_out for l in self.layers[:-1])
        self.activation = activation
        if self.layers[0].n_in != self.m or self.layers[-1].n_out != self.m:
            raise DimensionError("one-step model must map R^m to R^m")
        self.params = {}
        for i, layer in enumerate(self.layers):
            for k, v in layer.params.items():
                self.params[f"layer{i}.{k}"] = v

    @classmethod
    def identity(cls, m):
        return cls(m, layers=[Dense(m, m, "identity", weight=np.eye(m), bias=np.zeros(m))])

    @classmethod
    def linear(cls, weight, bias=None):
        weight = np.asarray(weight, dtype=np.float64)
        m = weight.shape[0]
        return cls(m, layers=[Dense(m, m, "identity", weight=weight, bias=bias)])

    def copy(self):
        return OneStepMlp(self.m, activation=self.activation, layers=[l.copy() for l in self.layers])

    def forward(self, window):
        w = np.asarray(window, dtype=np.float64)
        vector = w.ndim == 1
        wb, squeeze = _as_window_batch(w[None] if vector else w, 1, self.m)
        x = wb[:, 0, :]
        caches = []
        for layer in self.layers:
            x, c = layer.forward(x)
            caches.append(c)
        out = x[:, None, :]
        if vector:
            out = out[0, 0]
        elif squeeze:
            out = out[0]
        return out, MlpCache(caches, squeeze or vector)

    def backward(self, cache, d_out):
        d = np.asarray(d_out, dtype=np.float64).reshape(-1, self.m)
        grads = {}
        for i in range(len(self.layers) - 1, -1, -1):
            d, dW, db = dense_backward(cache.layers[i], d)
            grads[f"layer{i}.weight"] = dW
            grads[f"layer{i}.bias"] = db
        d = d[:, None, :]
        if cache.squeeze:
            d = d[0]
        return d, grads

    def spec(self):
        return {"kind": self.kind, "m": self.m, "hidden": list(self.hidden),
                "activation": self.activation, "k_in": 1, "k_out": 1}


@dataclass
class Seq2SeqCache:
    encoder: list
    decoder: list
    head: list
    batch: int
    squeeze: bool

    def activations(self):
        return (*self.encoder, *self.decoder, *self.head)


class Seq2SeqLstm(_Model):
    """Encoder/decoder LSTM: consumes ``k_in`` latents, emits ``k_out``.

    The decoder starts from the encoder's final state, takes the last
    window entry as its first input and feeds back its own outputs.
    """

    kind = "seq2seq_lstm"

    def __init__(self, m, hidden=128, k_in=3, k_out=3, rng=None,
                 encoder=None, decoder=None, head=None):
        if k_in < 1 or k_out < 1:
            raise ConfigError("k_in and k_out must be >= 1")
        self.m = int(m)
        self.n_hidden = int(hidden)
        self.k_in = int(k_in)
        self.k_out = int(k_out)
        if encoder is None:
            rng = rng if rng is not None else np.random.default_rng(0)
            encoder = LstmCell(self.m, self.n_hidden, rng=rng)
            decoder = LstmCell(self.m, self.n_hidden, rng=rng)
            head = Dense(self.n_hidden, self.m, "identity", rng=rng)
        self.encoder, self.decoder, self.head = encoder, decoder, head
        self.params = {}
        for prefix, part in (("encoder", encoder), ("decoder", decoder), ("head", head)):
            for k, v in part.params.items():
                self.params[f"{prefix}.{k}"] = v

    @classmethod
    def zeros(cls, m, hidden, k_in, k_out):
        H = hidden
        return cls(m, hidden, k_in, k_out,
                   encoder=LstmCell(m, H, weight=np.zeros((4 * H, m + H)), bias=np.zeros(4 * H)),
                   decoder=LstmCell(m, H, weight=np.zeros((4 * H, m + H)), bias=np.zeros(4 * H)),
                   head=Dense(H, m, "identity", weight=np.zeros((m, H)), bias=np.zeros(m)))

    def copy(self):
        return Seq2SeqLstm(self.m, self.n_hidden, self.k_in, self.k_out,
                           encoder=self.encoder.copy(), decoder=self.decoder.copy(),
                           head=self.head.copy())

    def forward(self, window):
        wb, squeeze = _as_window_batch(window, self.k_in, self.m)
        B = wb.shape[0]
        h = np.zeros((B, self.n_hidden))
        c = np.zeros((B, self.n_hidden))
        enc, dec, head = [], [], []
        for j in range(self.k_in):
            h, c, cache = lstm_step(self.encoder, wb[:, j], h, c)
            enc.append(cache)
        inp = wb[:, -1]
        outs = []
        for _ in range(self.k_out):
            h, c, cache = lstm_step(self.decoder, inp, h, c)
            dec.append(cache)
            y, hc = self.head.forward(h)
            head.append(hc)
            outs.append(y)
            inp = y
        out = np.stack(outs, axis=1)
        return (out[0] if squeeze else out), Seq2SeqCache(enc, dec, head, B, squeeze)

    def backward(self, cache, d_out):
        d_out = np.asarray(d_out, dtype=np.float64)
        if cache.squeeze:
            d_out = d_out[None]
        grads = {k: np.zeros_like(v) for k, v in self.params.items()}
        B, H = cache.batch, self.n_hidden
        dh = np.zeros((B, H))
        dc = np.zeros((B, H))
        d_fed = None
        for j in range(self.k_out - 1, -1, -1):
            dy = d_out[:, j] if d_fed is None else d_out[:, j] + d_fed
            dh_head, dW, db = dense_backward(cache.head[j], dy)
            grads["head.weight"] += dW
            grads["head.bias"] += db
            d_fed, dh, dc, dW, db = lstm_step_backward(cache.decoder[j], dh + dh_head, dc)
            grads["decoder.weight"] += dW
            grads["decoder.bias"] += db
        d_window = np.zeros((B, self.k_in, self.m))
        d_window[:, -1] += d_fed
        for j in range(self.k_in - 1, -1, -1):
            dx, dh, dc, dW, db = lstm_step_backward(cache.encoder[j], dh, dc)
            grads["encoder.weight"] += dW
            grads["encoder.bias"] += db
            d_window[:, j] += dx
        return (d_window[0] if cache.squeeze else d_window), grads

    def spec(self):
        return {"kind": self.kind, "m": self.m, "hidden": self.n_hidden,
                "k_in": self.k_in, "k_out": self.k_out}


SurrogateModel = _Model


def build_model(spec, rng=None):
    kind = spec["kind"]
    if kind == OneStepMlp.kind:
        return OneStepMlp(spec["m"], tuple(spec.get("hidden", ())), spec.get("activation", "tanh"), rng=rng)
    if kind == Seq2SeqLstm.kind:
        return Seq2SeqLstm(spec["m"], spec.get("hidden", 128), spec.get("k_in", 3), spec.get("k_out", 3), rng=rng)
    raise ConfigError(f"unknown surrogate kind {kind!r}")


def model_to_arrays(model):
    return model.spec(), {k: v.copy() for k, v in model.params.items()}


def model_from_arrays(spec, arrays):
    model = build_model(spec, rng=np.random.default_rng(0))
    model.load_params(arrays)
    return model


def predict_one(f, eta):
    if f.k_in != 1 or f.k_out != 1:
        raise ConfigError("predict_one needs a one-step model")
    eta = np.asarray(eta, dtype=np.float64)
    if eta.shape[-1] != f.m:
        raise DimensionError(f"latent size {eta.shape[-1]} != {f.m}")
    return f.forward(eta)[0]


def predict_seq(f, window):
    window = np.asarray(window, dtype=np.float64)
    if window.shape[-2] != f.k_in:
        raise DimensionError(f"window length {window.shape[-2]} != k_in={f.k_in}")
    return f.forward(window)[0]


def advance_window(window, out):
    """Slide a window forward by the ``k_out`` freshly predicted latents."""
    k_in, k_out = window.shape[-2], out.shape[-2]
    if k_out >= k_in:
        return out[..., k_out - k_in:, :]
    return np.concatenate([window[..., k_out:, :], out], axis=-2)


def advance_window_grad(d_next, k_in, k_out):
    """Split the gradient of an advanced window into ``(d_window, d_out)``."""
    shape = d_next.shape[:-2]
    m = d_next.shape[-1]
    d_window = np.zeros((*shape, k_in, m))
    d_out = np.zeros((*shape, k_out, m))
    if k_out >= k_in:
        d_out[..., k_out - k_in:, :] = d_next
    else:
        d_window[..., k_out:, :] = d_next[..., :k_in - k_out, :]
        d_out[...] = d_next[..., k_in - k_out:, :]
    return d_window, d_out


def compose_delta(f, eta, delta):
    """Apply ``f`` to its own output ``delta`` times.

    ``delta == 0`` returns the input unchanged. For window models each
    application advances the window by ``k_out`` latents.
    """
    if delta < 0:
        raise ConfigError("delta must be >= 0")
    x = np.asarray(eta, dtype=np.float64)
    vector = x.ndim == 1
    for _ in range(delta):
        if vector:
            x = f.forward(x)[0]
        else:
            x = advance_window(x, f.forward(x)[0])
    return x


@dataclass
class RolloutConfig:
    horizon: int
    teacher: np.ndarray

    def __post_init__(self):
        if self.horizon < 1:
            raise ConfigError("rollout horizon must be >= 1")
        self.teacher = np.asarray(self.teacher, dtype=np.float64)


def rollout(f, cfg):
    """Iterated prediction: the first call sees ground truth, later calls
    see only the model's own outputs. Returns ``(horizon, m)``."""
    teacher = cfg.teacher
    if teacher.ndim == 1:
        teacher = teacher[None]
    if teacher.shape != (f.k_in, f.m):
        raise DimensionError(f"teacher window {teacher.shape} != ({f.k_in}, {f.m})")
    window = teacher
    preds = []
    n = 0
    while n < cfg.horizon:
        out = f.forward(window)[0]
        preds.append(out)
        n += out.shape[0]
        window = advance_window(window, out)
    return np.concatenate(preds, axis=0)[:cfg.horizon]
