from .burgers import burgers_cfl, burgers_dt, burgers_grid, burgers_step, make_burgers_ic
from .grid import BurgersConfig, FieldState, GridSpec, ShallowWaterConfig, Trajectory
from .shallow_water import (disk_mask, make_cylinder_ic, shallow_water_cfl, shallow_water_dt,
                            shallow_water_grid, shallow_water_step, total_energy)
from .simulate import (BURGERS_RANGES, SW_RANGES, dataset_grid, draw_ic_params,
                       generate_dataset, sim_seed, simulate)

__all__ = [
    "BurgersConfig", "FieldState", "GridSpec", "ShallowWaterConfig", "Trajectory",
    "burgers_cfl", "burgers_dt", "burgers_grid", "burgers_step", "make_burgers_ic",
    "disk_mask", "make_cylinder_ic", "shallow_water_cfl", "shallow_water_dt",
    "shallow_water_grid", "shallow_water_step", "total_energy",
    "BURGERS_RANGES", "SW_RANGES", "dataset_grid", "draw_ic_params", "generate_dataset",
    "sim_seed", "simulate",
]
