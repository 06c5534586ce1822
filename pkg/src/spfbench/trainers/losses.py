"""Loss values and gradients for the one-step, ATF, PF and SPF objectives.

All losses act on windows ``(B, k, m)``; the per-sample loss is the
squared Euclidean norm over the whole output window. Batch objectives
are the mean of weighted per-sample losses.
"""
from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from ..surrogate import advance_window, advance_window_grad, compose_delta


def _batch(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return x[None, None], "vector"
    if x.ndim == 2:
        return x[None], "window"
    return x, None


def squared_loss(pred, target, weights):
    """Per-sample ``||pred - target||^2``, the weighted sum and its gradient."""
    diff = pred - target
    per = np.sum(diff * diff, axis=(1, 2))
    w = np.asarray(weights, dtype=np.float64)
    total = float(np.sum(w * per))
    grad = 2.0 * w[:, None, None] * diff
    return per, total, grad


def _merge(acc, grads):
    if acc is None:
        return dict(grads)
    for k, g in grads.items():
        acc[k] = acc[k] + g
    return acc


def one_step_loss(f, x, y, weights=None, meter=None, penalty=None):
    """Mean weighted one-step loss over a batch and parameter gradients."""
    x, _ = _batch(x)
    y, _ = _batch(y)
    B = x.shape[0]
    w = np.ones(B) if weights is None else np.asarray(weights, dtype=np.float64)
    out, cache = f.forward(x)
    if meter is not None:
        meter.retain(cache)
    per, total, d = squared_loss(out, y, w)
    if penalty is not None and penalty.weight > 0:
        pen, dpen = penalty.value_and_grad(out, y)
        total += float(np.sum(w * penalty.weight * pen))
        d = d + (w * penalty.weight)[:, None, None] * dpen
    _, grads = f.backward(cache, d / B)
    return total / B, grads


def atf_loss(f, x, targets, lambdas=None, meter=None):
    """``sum_k lambda_k ||f^k(x) - y_k||^2`` with gradients through every step.

    ``targets`` lists the ``delta`` target windows; ``lambdas`` holds the
    weights of steps 2..delta (step 1 has weight 1).
    """
    delta = len(targets)
    if delta < 1:
        raise ConfigError("ATF needs at least one target")
    lambdas = (1.0,) * (delta - 1) if lambdas is None else tuple(lambdas)
    if len(lambdas) != delta - 1:
        raise ConfigError(f"expected {delta - 1} lambda weights, got {len(lambdas)}")
    weights = (1.0, *lambdas)
    x, _ = _batch(x)
    B = x.shape[0]
    window = x
    caches, dlosses = [], []
    total = 0.0
    for k in range(delta):
        y, _ = _batch(targets[k])
        out, cache = f.forward(window)
        if meter is not None:
            meter.retain(cache)
        _, t, d = squared_loss(out, y, np.full(B, weights[k]))
        total += t
        caches.append(cache)
        dlosses.append(d / B)
        window = advance_window(window, out)
    grads = None
    d_window = None
    for k in range(delta - 1, -1, -1):
        d_out = dlosses[k]
        d_carry = None
        if d_window is not None:
            d_carry, d_from_next = advance_window_grad(d_window, f.k_in, f.k_out)
            d_out = d_out + d_from_next
        d_in, g = f.backward(caches[k], d_out)
        grads = _merge(grads, g)
        d_window = d_in if d_carry is None else d_in + d_carry
    return total / B, grads


def frozen_prefix(frozen, x, delta):
    """``f*^{delta-1}(x)`` evaluated without keeping any cache."""
    x, _ = _batch(x)
    return np.array(compose_delta(frozen, x, delta - 1), copy=True)


def pf_loss(f, x, target, delta, frozen=None, meter=None, penalty=None):
    """Final-step loss ``||f(f*^{delta-1}(x)) - y||^2``; gradient through one step only."""
    if delta < 1:
        raise ConfigError("delta must be >= 1")
    frozen = f.copy() if frozen is None else frozen
    buf = frozen_prefix(frozen, x, delta)
    if meter is not None:
        meter.retain_buffer(buf)
    return one_step_loss(f, buf, target, meter=meter, penalty=penalty)


def spf_weighted_loss(f, x, y, from_d1, alpha, meter=None, penalty=None):
    """One-step loss with weight 1 for ground-truth inputs and ``alpha`` otherwise."""
    tags = np.atleast_1d(np.asarray(from_d1, dtype=bool))
    gamma = np.where(tags, 1.0, float(alpha))
    return one_step_loss(f, x, y, weights=gamma, meter=meter, penalty=penalty)
