"""Windowed views of latent series.

A sample is identified by ``(series, s)``: its input window is
``eta[s : s + k_in]`` and application ``j`` (1-based) of the model
targets ``eta[s + k_in + (j - 1) k_out : s + k_in + j k_out]``.
"""
from __future__ import annotations

import numpy as np

from ..errors import ConfigError, DimensionError


def as_series_list(data):
    if hasattr(data, "vectors"):
        return [np.asarray(data.vectors, dtype=np.float64)]
    if isinstance(data, np.ndarray):
        if data.ndim == 2:
            return [np.asarray(data, dtype=np.float64)]
        return [np.asarray(d, dtype=np.float64) for d in data]
    return [np.asarray(getattr(d, "vectors", d), dtype=np.float64) for d in data]


class WindowData:
    def __init__(self, data, k_in=1, k_out=1):
        self.series = as_series_list(data)
        if not self.series:
            raise ConfigError("no training series")
        m = {s.shape[1] for s in self.series if s.ndim == 2}
        if len(m) != 1 or any(s.ndim != 2 for s in self.series):
            raise DimensionError("all series must be 2D with one latent size")
        self.m = m.pop()
        self.k_in, self.k_out = int(k_in), int(k_out)

    @classmethod
    def for_model(cls, data, f):
        return cls(data, f.k_in, f.k_out)

    def n_starts(self, series, depth):
        T = self.series[series].shape[0]
        return max(0, T - self.k_in - depth * self.k_out + 1)

    def samples(self, depth=1):
        """All ``(series, start)`` pairs that have ``depth`` applications of targets."""
        pairs = [(i, s) for i in range(len(self.series)) for s in range(self.n_starts(i, depth))]
        if not pairs:
            raise ConfigError(f"series too short for depth {depth} with windows "
                              f"{self.k_in}->{self.k_out}")
        return np.array(pairs, dtype=np.int64)

    def inputs(self, pairs):
        return np.stack([self.series[i][s:s + self.k_in] for i, s in pairs])

    def targets(self, pairs, j=1):
        a = self.k_in + (j - 1) * self.k_out
        return np.stack([self.series[i][s + a:s + a + self.k_out] for i, s in pairs])


def epoch_order(n, rng, shuffle):
    return rng.permutation(n) if shuffle else np.arange(n)


def batches(order, size):
    for b in range(0, len(order), size):
        yield order[b:b + size]
