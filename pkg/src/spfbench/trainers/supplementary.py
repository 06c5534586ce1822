"""Model-generated inputs for stochastic pushforward training."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from ..surrogate import advance_window
from .data import WindowData


@dataclass
class SupplementaryDataset:
    """Per-series input windows, each either copied or predicted.

    ``windows[i][s]`` replaces the ground-truth input window starting at
    ``s``. Windows starting before ``delta * k_out`` have no ``delta``-step
    history and are ground-truth copies (``predicted`` is False there).
    """

    windows: list
    predicted: list
    delta: int
    epoch: int = 0
    fingerprint: str = ""

    @property
    def nbytes(self):
        return int(sum(w.nbytes for w in self.windows))

    def entry_count(self):
        return int(sum(p.sum() for p in self.predicted))


def build_supplementary(frozen, data, delta, epoch=0):
    """Apply the frozen model ``delta`` times to every ground-truth window.

    The window ending ``delta`` applications later receives the result.
    Each series is processed as one batch.
    """
    if delta < 1:
        raise ConfigError("delta must be >= 1")
    if not isinstance(data, WindowData):
        data = WindowData(data, frozen.k_in, frozen.k_out)
    shift = delta * data.k_out
    windows, predicted = [], []
    for i, eta in enumerate(data.series):
        n = data.n_starts(i, 0)
        if n < 1:
            raise ConfigError(f"series {i} is shorter than one window")
        w = np.stack([eta[s:s + data.k_in] for s in range(n)])
        mask = np.zeros(n, dtype=bool)
        if n > shift:
            x = w[:n - shift]
            for _ in range(delta):
                x = advance_window(x, frozen.forward(x)[0])
            w = w.copy()
            w[shift:] = x
            mask[shift:] = True
        windows.append(w)
        predicted.append(mask)
    return SupplementaryDataset(windows, predicted, int(delta), epoch, frozen.fingerprint())


@dataclass
class CombinedDataset:
    """Ground truth ``D1`` alongside a supplementary set; targets come from ``D1`` only."""

    d1: WindowData
    supp: SupplementaryDataset
    served: int = 0

    def input_d1(self, i, s):
        return self.d1.series[i][s:s + self.d1.k_in]

    def input_supp(self, i, s):
        return self.supp.windows[i][s]

    def target(self, i, s):
        a = self.d1.k_in
        return self.d1.series[i][s + a:s + a + self.d1.k_out]


def acquire(rng, t, D, p):
    """Draw one training pair for sample ``t = (series, start)``.

    Returns ``(input, target, from_d1)`` where ``from_d1 ~ Bernoulli(p)``.
    """
    i, s = int(t[0]), int(t[1])
    if not (0 <= i < len(D.d1.series)) or not (0 <= s < D.d1.n_starts(i, 1)):
        raise IndexError(f"sample {t} out of range")
    tag = bool(rng.random() < p)
    x = D.input_d1(i, s) if tag else D.input_supp(i, s)
    D.served += 1
    return x, D.target(i, s), tag


def acquire_batch(rng, pairs, D, p):
    """Vectorised :func:`acquire` over a batch of sample pairs."""
    tags = rng.random(len(pairs)) < p
    x = np.stack([D.input_d1(i, s) if tg else D.input_supp(i, s) for (i, s), tg in zip(pairs, tags)])
    y = np.stack([D.target(i, s) for i, s in pairs])
    D.served += len(pairs)
    return x, y, tags
