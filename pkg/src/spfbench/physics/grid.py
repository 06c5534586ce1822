from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DimensionError


@dataclass(frozen=True)
class GridSpec:
    """Uniform 2D grid. Arrays are indexed ``[i, j]`` with ``i`` along x."""

    nx: int
    ny: int
    dx: float
    dy: float
    dt: float

    def __post_init__(self):
        if self.nx < 8 or self.ny < 8:
            raise ConfigError(f"grid must be at least 8x8, got {self.nx}x{self.ny}")
        if not (self.dx > 0 and self.dy > 0 and self.dt > 0):
            raise ConfigError("dx, dy and dt must be positive")

    @property
    def shape(self):
        return (self.nx, self.ny)

    @property
    def cell_area(self):
        return self.dx * self.dy

    @classmethod
    def square(cls, n, side, dt, cell_centered=True):
        """``n x n`` grid over a square of the given side length."""
        d = side / n if cell_centered else side / (n - 1)
        return cls(n, n, d, d, dt)

    def with_dt(self, dt):
        return GridSpec(self.nx, self.ny, self.dx, self.dy, float(dt))


@dataclass
class FieldState:
    grid: GridSpec
    channels: dict

    def __post_init__(self):
        clean = {}
        for name, arr in self.channels.items():
            arr = np.asarray(arr, dtype=np.float64)
            if arr.shape != self.grid.shape:
                raise DimensionError(f"channel {name!r} has shape {arr.shape}, grid is {self.grid.shape}")
            clean[name] = arr
        self.channels = clean

    def __getitem__(self, name):
        return self.channels[name]

    @property
    def names(self):
        return tuple(self.channels)

    def stack(self):
        return np.stack([self.channels[c] for c in self.names])

    @classmethod
    def from_stack(cls, grid, names, data):
        return cls(grid, {n: np.array(data[i]) for i, n in enumerate(names)})

    def copy(self):
        return FieldState(self.grid, {k: v.copy() for k, v in self.channels.items()})


@dataclass
class Trajectory:
    """Saved states of one simulation, stored as ``(T, C, nx, ny)``."""

    grid: GridSpec
    names: tuple
    data: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.names = tuple(self.names)
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 4 or self.data.shape[1] != len(self.names) \
                or self.data.shape[2:] != self.grid.shape:
            raise DimensionError(f"trajectory array {self.data.shape} inconsistent with "
                                 f"{len(self.names)} channels on {self.grid.shape}")
        if self.data.shape[0] < 1:
            raise DimensionError("trajectory needs at least one state")

    def __len__(self):
        return self.data.shape[0]

    def state(self, t):
        return FieldState.from_stack(self.grid, self.names, self.data[t])

    @property
    def states(self):
        return [self.state(t) for t in range(len(self))]

    def slice(self, start, stop=None):
        return Trajectory(self.grid, self.names, self.data[start:stop], dict(self.meta))


@dataclass(frozen=True)
class BurgersConfig:
    viscosity: float = 0.01
    speed: float = 1.5
    length: float = 1.0

    def __post_init__(self):
        if self.viscosity <= 0:
            raise ConfigError("viscosity must be positive")
        if self.speed <= 0 or self.length <= 0:
            raise ConfigError("speed and length must be positive")

    @property
    def reynolds(self):
        return self.speed * self.length / self.viscosity


@dataclass(frozen=True)
class ShallowWaterConfig:
    g: float = 9.81
    depth: float = 1.0
    height: float = 0.5
    radius: float = 8.0
    smoothing: float = 0.05

    def __post_init__(self):
        if self.g <= 0 or self.depth <= 0:
            raise ConfigError("g and background depth must be positive")
        if self.height < 0 or self.radius < 0:
            raise ConfigError("cylinder height and radius must be non-negative")
        if not 0 <= self.smoothing <= 1:
            raise ConfigError("smoothing weight must lie in [0, 1]")
