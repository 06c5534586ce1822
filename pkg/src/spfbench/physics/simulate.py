from __future__ import annotations

from dataclasses import asdict

import numpy as np

from ..errors import ConfigError, NumericError
from .burgers import burgers_dt, burgers_step, make_burgers_ic
from .grid import BurgersConfig, GridSpec, ShallowWaterConfig, Trajectory
from .shallow_water import make_cylinder_ic, shallow_water_dt, shallow_water_step

SW_RANGES = {"height": (0.2, 1.0), "radius": (4.0, 16.0)}
BURGERS_RANGES = {"speed": (1.5, 5.0)}


def stepper_for(cfg):
    if isinstance(cfg, ShallowWaterConfig):
        return "shallow_water", shallow_water_step
    if isinstance(cfg, BurgersConfig):
        return "burgers", burgers_step
    raise ConfigError(f"no solver for config type {type(cfg).__name__}")


def simulate(ic, cfg, n_steps, save_stride=1, warmup=0):
    """Integrate from ``ic`` and keep every ``save_stride``-th state.

    The initial state is saved first; the first ``warmup`` saved states
    are dropped from the returned trajectory.
    """
    if n_steps < 0 or save_stride < 1 or warmup < 0:
        raise ConfigError("n_steps, warmup must be >= 0 and save_stride >= 1")
    name, step = stepper_for(cfg)
    names = ic.names
    saved = [ic.stack()]
    state = ic
    for k in range(1, n_steps + 1):
        try:
            state = step(state, cfg)
        except NumericError as exc:
            exc.step = k
            exc.args = (f"step {k}: {exc.args[0]}",)
            raise
        if k % save_stride == 0:
            saved.append(state.stack())
    if warmup >= len(saved):
        raise ConfigError(f"warmup {warmup} discards all {len(saved)} saved states")
    meta = {"solver": name, "steps": n_steps, "save_stride": save_stride,
            "warmup": warmup, "config": asdict(cfg)}
    return Trajectory(ic.grid, names, np.stack(saved[warmup:]), meta)


def sim_seed(seed, index):
    """Per-simulation stream, a function of (master seed, index) only."""
    return np.random.SeedSequence([int(seed), int(index)])


def draw_ic_params(ranges, seed, index):
    rng = np.random.default_rng(sim_seed(seed, index))
    out = {}
    for key in sorted(ranges):
        lo, hi = ranges[key]
        if lo > hi:
            raise ConfigError(f"range for {key!r} is empty: {lo} > {hi}")
        out[key] = float(rng.uniform(lo, hi))
    out["ic_seed"] = int(rng.integers(0, 2 ** 31))
    return out


def dataset_grid(system, n, base, ranges, side=1.0, cfl=None):
    """Grid with one ``dt`` that is stable for every IC in ``ranges``."""
    if system == "shallow_water":
        h_max = base.depth + ranges["height"][1]
        g = GridSpec.square(n, side, 1.0)
        return g.with_dt(shallow_water_dt(g, base, h_max, 0.15 if cfl is None else cfl))
    if system == "burgers":
        g = GridSpec.square(n, base.length, 1.0, cell_centered=False)
        return g.with_dt(burgers_dt(g, base, 0.4 if cfl is None else cfl, speed=ranges["speed"][1]))
    raise ConfigError(f"unknown system {system!r}")


def generate_dataset(n_sims, ic_ranges, seed, system="shallow_water", grid=None, base=None,
                     n_saved=120, save_stride=5, warmup=20):
    """Simulate ``n_sims`` runs with IC parameters drawn uniformly from ``ic_ranges``.

    Each run's parameters depend only on ``(seed, index)``.
    """
    if n_sims < 1:
        raise ConfigError("n_sims must be >= 1")
    if base is None:
        base = ShallowWaterConfig() if system == "shallow_water" else BurgersConfig()
    if grid is None:
        grid = dataset_grid(system, 32, base, ic_ranges)
    out = []
    for idx in range(n_sims):
        params = draw_ic_params(ic_ranges, seed, idx)
        if system == "shallow_water":
            cfg = ShallowWaterConfig(g=base.g, depth=base.depth, height=params["height"],
                                     radius=params["radius"], smoothing=base.smoothing)
            ic = make_cylinder_ic(cfg, grid)
        elif system == "burgers":
            cfg = BurgersConfig(viscosity=base.viscosity, speed=params["speed"], length=base.length)
            ic = make_burgers_ic(cfg, params["ic_seed"], grid)
        else:
            raise ConfigError(f"unknown system {system!r}")
        try:
            traj = simulate(ic, cfg, (n_saved + warmup - 1) * save_stride, save_stride, warmup)
        except NumericError as exc:
            exc.args = (f"simulation {idx}: {exc.args[0]}",)
            exc.simulation = idx
            raise
        traj.meta.update({"index": idx, "seed": int(seed), "ic": params})
        out.append(traj)
    return out
