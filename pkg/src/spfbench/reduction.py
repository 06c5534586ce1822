"""Linear (POD) and dense-autoencoder reducers between fields and latents.

Fields are normalised per channel (z-score over the training set) before
reduction; ``decode`` always returns physical units.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError, DivergenceError, RankError
from .nn import Adam, Dense, dense_backward
from .physics.grid import FieldState, GridSpec, Trajectory


def snapshot_array(data):
    """Stack trajectories / states / arrays into ``(N, C, nx, ny)``."""
    if isinstance(data, np.ndarray):
        arr = data if data.ndim == 4 else data[None]
        return np.asarray(arr, dtype=np.float64)
    if isinstance(data, Trajectory):
        return data.data
    if isinstance(data, FieldState):
        return data.stack()[None]
    parts = [snapshot_array(d) for d in data]
    if not parts:
        raise ConfigError("no snapshots supplied")
    return np.concatenate(parts, axis=0)


def _names_grid(data):
    first = data[0] if isinstance(data, (list, tuple)) else data
    if isinstance(first, (Trajectory, FieldState)):
        names = first.names
        return tuple(names), first.grid
    return None, None


@dataclass
class Reducer:
    kind: str
    m: int
    field_shape: tuple
    norm_mean: np.ndarray
    norm_scale: np.ndarray
    mean_field: np.ndarray
    basis: np.ndarray = None
    singular_values: np.ndarray = None
    encoder: list = field(default_factory=list)
    decoder: list = field(default_factory=list)
    names: tuple = None
    grid: GridSpec = None
    train_mse: float = None

    def __post_init__(self):
        self.field_shape = tuple(int(s) for s in self.field_shape)
        if np.any(np.asarray(self.norm_scale) <= 0):
            raise ConfigError("normalisation scales must be positive")
        if self.m > self.n:
            raise RankError(f"latent dimension {self.m} exceeds state size {self.n}")

    @property
    def n(self):
        return int(np.prod(self.field_shape))

    def _normalize(self, x):
        C = self.field_shape[0]
        return (x - self.norm_mean.reshape(C, 1, 1)) / self.norm_scale.reshape(C, 1, 1)

    def _denormalize(self, z):
        C = self.field_shape[0]
        return z * self.norm_scale.reshape(C, 1, 1) + self.norm_mean.reshape(C, 1, 1)

    def encode_array(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-3:] != self.field_shape:
            raise DimensionError(f"field shape {x.shape[-3:]} != reducer shape {self.field_shape}")
        lead = x.shape[:-3]
        z = self._normalize(x).reshape(-1, self.n) - self.mean_field
        if self.kind == "pod":
            eta = z @ self.basis.T
        else:
            eta = _mlp(self.encoder, z)[0]
        return eta.reshape(*lead, self.m)

    def decode_array(self, eta):
        eta = np.asarray(eta, dtype=np.float64)
        if eta.shape[-1] != self.m:
            raise DimensionError(f"latent size {eta.shape[-1]} != {self.m}")
        lead = eta.shape[:-1]
        e = eta.reshape(-1, self.m)
        z = e @ self.basis if self.kind == "pod" else _mlp(self.decoder, e)[0]
        z = (z + self.mean_field).reshape(-1, *self.field_shape)
        return self._denormalize(z).reshape(*lead, *self.field_shape)

    def decode_jacobian(self):
        """``d x / d eta`` as ``(n, m)``; POD decoding is affine."""
        if self.kind != "pod":
            raise ConfigError("decode jacobian is only constant for POD")
        C = self.field_shape[0]
        per_elem = np.repeat(self.norm_scale, self.n // C)
        return self.basis.T * per_elem[:, None]

    def fingerprint(self):
        h = hashlib.sha1()
        for k, v in sorted(self.arrays().items()):
            h.update(k.encode())
            h.update(np.ascontiguousarray(v).tobytes())
        return h.hexdigest()[:16]

    def arrays(self):
        out = {"norm_mean": self.norm_mean, "norm_scale": self.norm_scale,
               "mean_field": self.mean_field}
        if self.kind == "pod":
            out["basis"] = self.basis
            out["singular_values"] = self.singular_values
        else:
            for i, l in enumerate(self.encoder):
                out[f"encoder{i}.weight"], out[f"encoder{i}.bias"] = l.weight, l.bias
            for i, l in enumerate(self.decoder):
                out[f"decoder{i}.weight"], out[f"decoder{i}.bias"] = l.weight, l.bias
        return out

    def meta(self):
        d = {"kind": self.kind, "m": self.m, "field_shape": list(self.field_shape),
             "names": list(self.names) if self.names else None, "train_mse": self.train_mse}
        if self.grid is not None:
            g = self.grid
            d["grid"] = [g.nx, g.ny, g.dx, g.dy, g.dt]
        if self.kind == "dense_ae":
            d["encoder_act"] = [l.activation for l in self.encoder]
            d["decoder_act"] = [l.activation for l in self.decoder]
        return d

    @classmethod
    def from_parts(cls, meta, arrays):
        grid = GridSpec(*meta["grid"]) if meta.get("grid") else None
        names = tuple(meta["names"]) if meta.get("names") else None
        common = dict(kind=meta["kind"], m=int(meta["m"]), field_shape=tuple(meta["field_shape"]),
                      norm_mean=arrays["norm_mean"], norm_scale=arrays["norm_scale"],
                      mean_field=arrays["mean_field"], names=names, grid=grid,
                      train_mse=meta.get("train_mse"))
        if meta["kind"] == "pod":
            return cls(basis=arrays["basis"], singular_values=arrays["singular_values"], **common)
        enc = [Dense(arrays[f"encoder{i}.weight"].shape[1], arrays[f"encoder{i}.weight"].shape[0], a,
                     weight=arrays[f"encoder{i}.weight"], bias=arrays[f"encoder{i}.bias"])
               for i, a in enumerate(meta["encoder_act"])]
        dec = [Dense(arrays[f"decoder{i}.weight"].shape[1], arrays[f"decoder{i}.weight"].shape[0], a,
                     weight=arrays[f"decoder{i}.weight"], bias=arrays[f"decoder{i}.bias"])
               for i, a in enumerate(meta["decoder_act"])]
        return cls(encoder=enc, decoder=dec, **common)


def _mlp(layers, x):
    caches = []
    for l in layers:
        x, c = l.forward(x)
        caches.append(c)
    return x, caches


def _norm_stats(X, normalize):
    C = X.shape[1]
    if not normalize:
        return np.zeros(C), np.ones(C)
    mean = X.mean(axis=(0, 2, 3))
    std = X.std(axis=(0, 2, 3))
    return mean, np.where(std > 0, std, 1.0)


def _sign_fix(basis):
    for row in basis:
        nz = np.flatnonzero(np.abs(row) > 1e-12 * np.abs(row).max())
        if nz.size and row[nz[0]] < 0:
            row *= -1.0
    return basis


def fit_pod(train, m, normalize=True, center=True):
    """POD basis from the top ``m`` right singular vectors of the snapshot matrix.

    Snapshots are rows; fields are normalised per channel and, with
    ``center``, the mean field is subtracted first.
    """
    X = snapshot_array(train)
    N = X.shape[0]
    n = int(np.prod(X.shape[1:]))
    if m < 1 or m > N or m > n:
        raise RankError(f"latent dimension {m} needs 1 <= m <= min(snapshots={N}, size={n})")
    mean, scale = _norm_stats(X, normalize)
    r = Reducer("pod", m, X.shape[1:], mean, scale, np.zeros(n), basis=np.zeros((m, n)),
                singular_values=np.zeros(0))
    Z = r._normalize(X).reshape(N, n)
    mf = Z.mean(axis=0) if center else np.zeros(n)
    _, s, vt = np.linalg.svd(Z - mf, full_matrices=False)
    r.mean_field = mf
    r.basis = _sign_fix(vt[:m].copy())
    r.singular_values = s
    r.names, r.grid = _names_grid(train)
    r.train_mse = reconstruction_mse(r, X)
    return r


def fit_dense_ae(train, m, epochs=200, lr=1e-3, seed=0, hidden=(), activation="tanh",
                 identity_init=False, normalize=True):
    """Dense autoencoder trained full-batch with Adam on the reconstruction loss.

    The loss is the per-snapshot squared error averaged over snapshots,
    measured in normalised units.
    """
    X = snapshot_array(train)
    N = X.shape[0]
    n = int(np.prod(X.shape[1:]))
    rng = np.random.default_rng(seed)
    mean, scale = _norm_stats(X, normalize)
    r = Reducer("dense_ae", m, X.shape[1:], mean, scale, np.zeros(n))
    Z = r._normalize(X).reshape(N, n)
    r.mean_field = Z.mean(axis=0)
    Z = Z - r.mean_field

    def stack(sizes):
        out = []
        for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
            act = "identity" if i == len(sizes) - 2 else activation
            if identity_init and a == b:
                out.append(Dense(a, b, act, weight=np.eye(a), bias=np.zeros(b)))
            else:
                out.append(Dense(a, b, act, rng=rng))
        return out

    r.encoder = stack([n, *hidden, m])
    r.decoder = stack([m, *reversed(hidden), n])
    layers = r.encoder + r.decoder
    params = {f"{i}.{k}": v for i, l in enumerate(layers) for k, v in l.params.items()}
    opt = Adam(params, lr=lr)
    loss = np.nan
    for epoch in range(epochs):
        y, caches = _mlp(layers, Z)
        diff = y - Z
        loss = float(np.sum(diff * diff) / N)
        if not np.isfinite(loss):
            raise DivergenceError("autoencoder loss is not finite", epoch=epoch)
        d = 2.0 * diff / N
        grads = {}
        for i in range(len(layers) - 1, -1, -1):
            d, dW, db = dense_backward(caches[i], d)
            grads[f"{i}.weight"], grads[f"{i}.bias"] = dW, db
        opt.step(grads)
    y, _ = _mlp(layers, Z)
    r.train_mse = float(np.sum((y - Z) ** 2) / N)
    r.names, r.grid = _names_grid(train)
    return r


def encode(r, x):
    """Latent vector(s) for a FieldState, trajectory or raw field array."""
    if isinstance(x, FieldState):
        return r.encode_array(x.stack())
    if isinstance(x, Trajectory):
        return r.encode_array(x.data)
    return r.encode_array(x)


def decode(r, eta, grid=None):
    """FieldState for a single latent; raw ``(..., C, nx, ny)`` array otherwise."""
    eta = np.asarray(eta, dtype=np.float64)
    x = r.decode_array(eta)
    grid = grid or r.grid
    if eta.ndim == 1 and grid is not None and r.names is not None:
        return FieldState.from_stack(grid, r.names, x)
    return x


def reconstruction_mse(r, data):
    """Mean over snapshots of the summed squared reconstruction error."""
    X = snapshot_array(data)
    if X.shape[0] == 0:
        raise ConfigError("empty dataset")
    rec = r.decode_array(r.encode_array(X))
    d = (rec - X).reshape(X.shape[0], -1)
    return float(np.mean(np.sum(d * d, axis=1)))


@dataclass
class LatentSeries:
    vectors: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or self.vectors.shape[0] < 2:
            raise DimensionError(f"latent series needs shape (T>=2, m), got {self.vectors.shape}")

    def __len__(self):
        return self.vectors.shape[0]

    @property
    def m(self):
        return self.vectors.shape[1]

    def __getitem__(self, idx):
        return self.vectors[idx]


def encode_trajectory(r, traj, index=None):
    meta = {"reducer": r.fingerprint()}
    if index is not None:
        meta["trajectory"] = index
    return LatentSeries(r.encode_array(traj.data), meta)


@dataclass
class LatentScaler:
    """Global affine rescaling ``(eta - shift) / scale`` of latent vectors."""

    shift: float = 0.0
    scale: float = 1.0

    @classmethod
    def fit(cls, series):
        V = np.concatenate([np.asarray(getattr(s, "vectors", s)) for s in series], axis=0)
        s = float(V.std())
        return cls(float(V.mean()), s if s > 0 else 1.0)

    def transform(self, eta):
        return (np.asarray(eta, dtype=np.float64) - self.shift) / self.scale

    def inverse(self, z):
        return np.asarray(z, dtype=np.float64) * self.scale + self.shift
