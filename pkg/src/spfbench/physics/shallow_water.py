"""Shallow-water equations in conservative form on a closed basin."""
from __future__ import annotations

import numpy as np

from ..errors import ConfigError, DryingError, StabilityError
from .grid import FieldState, GridSpec


def _reflect_pad(h, u, v):
    hp = np.pad(h, 1, mode="edge")
    up = np.pad(u, 1, mode="edge")
    vp = np.pad(v, 1, mode="edge")
    # wall-normal velocity flips sign in the ghost cells
    up[0, :] *= -1.0
    up[-1, :] *= -1.0
    vp[:, 0] *= -1.0
    vp[:, -1] *= -1.0
    return hp, up, vp


def shallow_water_cfl(state, cfg):
    g = state.grid
    return np.sqrt(cfg.g * state["h"].max()) * g.dt / min(g.dx, g.dy)


def shallow_water_dt(grid, cfg, h_max, cfl=0.15):
    return cfl * min(grid.dx, grid.dy) / np.sqrt(cfg.g * h_max)


def shallow_water_step(state, cfg):
    """Forward-Euler step with centred flux differences.

    Each conserved quantity ``q`` is advanced as
    ``(1 - w) q + w avg4(q) - dt div F(q)`` where ``avg4`` is the mean of
    the four neighbours and ``w = cfg.smoothing``. Ghost cells mirror the
    depth and negate the wall-normal velocity.
    """
    for c in ("u", "v", "h"):
        if c not in state.channels:
            raise ConfigError(f"shallow-water state is missing channel {c!r}")
    h, u, v = state["h"], state["u"], state["v"]
    if not np.all(h > 0):
        raise DryingError("water depth is not positive everywhere")
    cfl = shallow_water_cfl(state, cfg)
    if cfl > 0.5:
        raise StabilityError(f"shallow-water CFL {cfl:.3f} exceeds 0.5")
    grid = state.grid
    gg = cfg.g
    w = cfg.smoothing
    hp, up, vp = _reflect_pad(h, u, v)
    hu = hp * up
    hv = hp * vp
    q = (hp, hu, hv)
    fx = (hu, hu * up + 0.5 * gg * hp * hp, hu * vp)
    fy = (hv, hu * vp, hv * vp + 0.5 * gg * hp * hp)
    new = []
    for k in range(3):
        div = ((fx[k][2:, 1:-1] - fx[k][:-2, 1:-1]) / (2.0 * grid.dx)
               + (fy[k][1:-1, 2:] - fy[k][1:-1, :-2]) / (2.0 * grid.dy))
        qk = q[k]
        avg = 0.25 * (qk[2:, 1:-1] + qk[:-2, 1:-1] + qk[1:-1, 2:] + qk[1:-1, :-2])
        c = qk[1:-1, 1:-1]
        # (1 - w) c + w avg, arranged so a constant state stays exact
        new.append(c + w * (avg - c) - grid.dt * div)
    h_new = new[0]
    if not np.all(h_new > 0):
        raise DryingError("water depth is not positive everywhere")
    return FieldState(grid, {"u": new[1] / h_new, "v": new[2] / h_new, "h": h_new})


def disk_mask(grid, radius):
    """Cells strictly inside a disk of ``radius`` grid units at the grid centre."""
    ci = (grid.nx - 1) / 2.0
    cj = (grid.ny - 1) / 2.0
    I, J = np.meshgrid(np.arange(grid.nx) - ci, np.arange(grid.ny) - cj, indexing="ij")
    return I ** 2 + J ** 2 < radius ** 2


def make_cylinder_ic(cfg, grid):
    if cfg.radius >= min(grid.nx, grid.ny) / 2.0:
        raise ConfigError(f"cylinder radius {cfg.radius} does not fit a {grid.nx}x{grid.ny} grid")
    h = np.full(grid.shape, cfg.depth)
    h[disk_mask(grid, cfg.radius)] += cfg.height
    zeros = np.zeros(grid.shape)
    return FieldState(grid, {"u": zeros, "v": zeros.copy(), "h": h})


def total_energy(state, g, depth_weighted=False):
    """Discrete ``sum (0.5 (u^2 + v^2) + 0.5 g h^2) dx dy``.

    With ``depth_weighted`` the kinetic term is multiplied by ``h``.
    """
    for c in ("u", "v", "h"):
        if c not in state.channels:
            raise ConfigError(f"energy needs channel {c!r}")
    u, v, h = state["u"], state["v"], state["h"]
    kinetic = 0.5 * (u * u + v * v)
    if depth_weighted:
        kinetic = kinetic * h
    return float(np.sum(kinetic + 0.5 * g * h * h) * state.grid.cell_area)


def shallow_water_grid(n, side, cfg, h_max, cfl=0.15):
    g = GridSpec.square(n, side, 1.0)
    return g.with_dt(shallow_water_dt(g, cfg, h_max, cfl))
