"""Spatially correlated Gaussian noise with a Matern-type correlation."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError, NumericError

DENSE_MAX_SITES = 64 * 64
H_MIN = 1e-6


def matern_correlation(r, L):
    """``(1 + r/L) exp(-r/L)``."""
    if L <= 0:
        raise ConfigError("correlation length must be positive")
    r = np.asarray(r, dtype=np.float64)
    if np.any(r < 0):
        raise ConfigError("distance must be non-negative")
    q = r / L
    out = (1.0 + q) * np.exp(-q)
    return float(out) if out.ndim == 0 else out


balgovind_correlation = matern_correlation


@dataclass(frozen=True)
class NoiseSpec:
    L: float = 4.0
    amplitude: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.L <= 0:
            raise ConfigError("correlation length must be positive")
        if self.amplitude < 0:
            raise ConfigError("amplitude must be non-negative")

    def scaled(self, amplitude):
        return NoiseSpec(self.L, amplitude, self.seed)


@lru_cache(maxsize=16)
def _factor(nx, ny, L):
    i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    pts = np.stack([i.ravel(), j.ravel()], axis=1).astype(np.float64)
    d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    C = matern_correlation(d, L)
    jitter = 1e-8
    for _ in range(6):
        try:
            return np.linalg.cholesky(C + jitter * np.eye(len(C)))
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise NumericError(f"covariance factorisation failed for {nx}x{ny}, L={L}")


def correlated_fields(shape, L, rng, n=1):
    """``n`` unit-variance fields of ``shape``; larger grids are tiled."""
    nx, ny = shape
    if nx * ny <= DENSE_MAX_SITES:
        Lc = _factor(nx, ny, float(L))
        z = rng.standard_normal((n, nx * ny))
        return (z @ Lc.T).reshape(n, nx, ny)
    tx, ty = min(nx, 64), min(ny, 64)
    out = np.empty((n, nx, ny))
    for a in range(0, nx, tx):
        for b in range(0, ny, ty):
            sx, sy = min(tx, nx - a), min(ty, ny - b)
            out[:, a:a + sx, b:b + sy] = correlated_fields((sx, sy), L, rng, n)
    return out


def sample_correlated_noise(grid, spec, n=None):
    """Zero-mean field(s) with covariance ``matern_correlation(r, L)``, times the amplitude."""
    rng = np.random.default_rng(spec.seed)
    shape = (grid.nx, grid.ny) if hasattr(grid, "nx") else tuple(grid)
    f = correlated_fields(shape, spec.L, rng, 1 if n is None else n)
    f = spec.amplitude * f
    return f[0] if n is None else f


def add_noise_to_input(x, spec, channel_names=None):
    """Perturbed copy of a field, field stack or window of field stacks.

    Every 2D channel gets its own correlated field; depth channels named
    ``h`` are clamped at ``H_MIN``. Returns ``(perturbed, n_clamped)``.
    """
    if hasattr(x, "stack"):
        names = x.names
        arr = x.stack()
    else:
        arr = np.asarray(x, dtype=np.float64)
        names = channel_names
    out = arr.copy()
    if spec.amplitude == 0:
        return (type(x).from_stack(x.grid, names, out) if hasattr(x, "stack") else out), 0
    lead = arr.shape[:-2]
    n = int(np.prod(lead)) if lead else 1
    rng = np.random.default_rng(spec.seed)
    noise = correlated_fields(arr.shape[-2:], spec.L, rng, n).reshape(arr.shape)
    out = arr + spec.amplitude * noise
    clamped = 0
    if names is not None and "h" in names:
        h = out[..., list(names).index("h"), :, :]
        clamped = int(np.sum(h < H_MIN))
        np.maximum(h, H_MIN, out=h)
    if hasattr(x, "stack"):
        out = type(x).from_stack(x.grid, names, out)
    return out, clamped


def energy_consistency_series(decoded, g=9.81, truth=None, grid=None, names=("u", "v", "h")):
    """Total energy per frame of a decoded rollout (and of ``truth`` if given)."""
    from .physics.shallow_water import total_energy
    from .physics.grid import FieldState

    def series(frames):
        if hasattr(frames, "states"):
            return np.array([total_energy(s, g) for s in frames.states])
        frames = np.asarray(frames)
        return np.array([total_energy(FieldState.from_stack(grid, names, fr), g) for fr in frames])

    e = series(decoded)
    return e if truth is None else (e, series(truth))
