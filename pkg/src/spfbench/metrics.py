"""Rollout evaluation metrics."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import correlate1d

from .errors import DimensionError

SSIM_WIN = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def mse(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    d = a - b
    return float(np.mean(d * d))


def accumulated_error(per_step):
    per_step = np.asarray(per_step, dtype=np.float64)
    if per_step.size == 0:
        raise DimensionError("accumulated error needs at least one step")
    return np.cumsum(per_step)


def _gaussian_kernel():
    r = np.arange(SSIM_WIN) - (SSIM_WIN - 1) / 2.0
    k = np.exp(-(r * r) / (2.0 * SSIM_SIGMA ** 2))
    return k / k.sum()


def _filter_valid(img, k):
    pad = (len(k) - 1) // 2
    out = correlate1d(img, k, axis=0, mode="constant")
    out = correlate1d(out, k, axis=1, mode="constant")
    return out[pad:-pad, pad:-pad]


def _ssim_2d(x, y, data_range):
    k = _gaussian_kernel()
    C1 = (SSIM_K1 * data_range) ** 2
    C2 = (SSIM_K2 * data_range) ** 2
    # products are formed symmetrically so that swapping x and y, or
    # passing x twice, gives identical floating-point results
    mx = _filter_valid(x, k)
    my = _filter_valid(y, k)
    sxx = _filter_valid(x * x, k) - mx * mx
    syy = _filter_valid(y * y, k) - my * my
    sxy = _filter_valid(x * y, k) - mx * my
    num = (2.0 * mx * my + C1) * (2.0 * sxy + C2)
    den = (mx * mx + my * my + C1) * (sxx + syy + C2)
    return float(np.mean(num / den))


def ssim_with_flag(pred, truth, data_range=None):
    """SSIM and whether the truth frame was constant.

    2D inputs are single channels; 3D inputs ``(C, nx, ny)`` average the
    per-channel scores. ``data_range`` defaults to the truth's per-channel
    ``max - min`` (1 for a constant truth, which raises the flag).
    """
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(truth, dtype=np.float64)
    if p.shape != t.shape:
        raise DimensionError(f"shape mismatch {p.shape} vs {t.shape}")
    if p.ndim == 2:
        p, t = p[None], t[None]
    if p.ndim != 3 or min(p.shape[1:]) < SSIM_WIN:
        raise DimensionError(f"SSIM needs frames of at least {SSIM_WIN}x{SSIM_WIN}, got {p.shape}")
    vals, flagged = [], False
    for pc, tc in zip(p, t):
        R = data_range
        if R is None:
            R = float(tc.max() - tc.min())
            if R == 0.0:
                R, flagged = 1.0, True
        vals.append(_ssim_2d(pc, tc, R))
    return float(np.mean(vals)), flagged


def ssim(pred, truth, data_range=None):
    if hasattr(pred, "stack"):
        pred = pred.stack()
    if hasattr(truth, "stack"):
        truth = truth.stack()
    return ssim_with_flag(pred, truth, data_range)[0]


def step_count_above(series, threshold=0.8, stop_at_first=True):
    """Steps before the series first drops below ``threshold``.

    With ``stop_at_first=False`` every step at or above the threshold counts.
    """
    s = np.asarray(series, dtype=np.float64)
    above = s >= threshold
    if not stop_at_first:
        return int(above.sum())
    below = np.flatnonzero(~above)
    return int(below[0]) if below.size else int(s.size)


@dataclass
class EvalSeries:
    step: np.ndarray
    mse: np.ndarray
    acc_error: np.ndarray
    ssim: np.ndarray
    energy_pred: np.ndarray = None
    energy_true: np.ndarray = None
    meta: dict = field(default_factory=dict)

    COLUMNS = ("step", "mse", "acc_error", "ssim", "energy_pred", "energy_true")

    def __post_init__(self):
        n = len(self.step)
        nan = np.full(n, np.nan)
        self.step = np.asarray(self.step, dtype=np.int64)
        for c in self.COLUMNS[1:]:
            v = getattr(self, c)
            setattr(self, c, nan.copy() if v is None else np.asarray(v, dtype=np.float64))
            if len(getattr(self, c)) != n:
                raise DimensionError(f"column {c} has {len(getattr(self, c))} rows, expected {n}")
        if n and np.any(np.diff(self.step) <= 0):
            raise DimensionError("steps must be strictly increasing")

    def __len__(self):
        return len(self.step)

    @classmethod
    def from_rollout(cls, steps, per_step_mse, ssims, energy_pred=None, energy_true=None, meta=None):
        return cls(steps, per_step_mse, accumulated_error(per_step_mse), ssims,
                   energy_pred, energy_true, dict(meta or {}))

    def rows(self):
        return [tuple(getattr(self, c)[i].item() for c in self.COLUMNS) for i in range(len(self))]

    def steps_above(self, threshold=0.8):
        return step_count_above(self.ssim, threshold)
