"""Energy-consistency penalty added to the one-step loss."""
from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from ..physics.shallow_water import total_energy


def energy_penalty_loss(base_loss, decoded_pred, decoded_truth, lambda_pc, g=9.81):
    """``base + lambda_pc * |E(pred) - E(truth)|`` for two FieldStates."""
    if lambda_pc < 0:
        raise ConfigError("lambda_pc must be >= 0")
    if lambda_pc == 0:
        return float(base_loss)
    for st in (decoded_pred, decoded_truth):
        if "h" not in st.channels:
            raise ConfigError("energy penalty needs an h channel")
    dE = total_energy(decoded_pred, g) - total_energy(decoded_truth, g)
    return float(base_loss) + lambda_pc * abs(dE)


class EnergyPenalty:
    """Per-sample ``sum_j |E(decode(pred_j)) - E(decode(true_j))|`` and its gradient.

    Works with POD reducers, whose decoder is affine, optionally behind a
    :class:`LatentScaler`.
    """

    def __init__(self, reducer, weight=1.0, g=9.81, scaler=None, depth_weighted=False):
        names = reducer.names or ()
        for c in ("u", "v", "h"):
            if c not in names:
                raise ConfigError("energy penalty needs u, v and h channels")
        if reducer.grid is None:
            raise ConfigError("reducer has no grid attached")
        self.reducer = reducer
        self.weight = float(weight)
        self.g = float(g)
        self.scaler = scaler
        self.depth_weighted = depth_weighted
        self.idx = [names.index(c) for c in ("u", "v", "h")]
        self.area = reducer.grid.cell_area
        self.jac = reducer.decode_jacobian()

    def _fields(self, eta):
        z = eta if self.scaler is None else self.scaler.inverse(eta)
        return self.reducer.decode_array(z)

    def energy(self, eta):
        x = self._fields(eta)
        iu, iv, ih = self.idx
        u, v, h = x[..., iu, :, :], x[..., iv, :, :], x[..., ih, :, :]
        ke = 0.5 * (u * u + v * v)
        if self.depth_weighted:
            ke = ke * h
        return np.sum(ke + 0.5 * self.g * h * h, axis=(-2, -1)) * self.area, x

    def value_and_grad(self, pred, target):
        Ep, x = self.energy(pred)
        Et, _ = self.energy(target)
        diff = Ep - Et
        per = np.sum(np.abs(diff), axis=-1)
        iu, iv, ih = self.idx
        u, v, h = x[..., iu, :, :], x[..., iv, :, :], x[..., ih, :, :]
        dx = np.zeros_like(x)
        if self.depth_weighted:
            dx[..., iu, :, :], dx[..., iv, :, :] = u * h, v * h
            dx[..., ih, :, :] = 0.5 * (u * u + v * v) + self.g * h
        else:
            dx[..., iu, :, :], dx[..., iv, :, :] = u, v
            dx[..., ih, :, :] = self.g * h
        dx *= self.area * np.sign(diff)[..., None, None, None]
        d_eta = dx.reshape(*dx.shape[:-3], -1) @ self.jac
        if self.scaler is not None:
            d_eta = d_eta * self.scaler.scale
        return per, d_eta
