"""Grid discretization of a layer stack into a conductance/capacitance network."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch, InvalidGrid, UnknownUnit
from ..floorplan import FloorplanUnit
from ..stack import LayerStack

# cell overlaps smaller than this fraction of a cell are edge-touching noise
_MIN_OVERLAP_FRACTION = 1e-9


@dataclass(frozen=True, eq=False)
class GridModel:
    """Conductances in W/K, capacities in J/K.  Arrays are indexed
    ``[layer, iy, ix]`` with ``iy = 0`` at the bottom edge of the chip.

    ``gx[l, j, i]`` links cells (i, i+1); ``gy[l, j, i]`` links (j, j+1);
    ``gz[l, j, i]`` links layer l to l+1.  ``power_map`` maps each powered
    unit to ``(layer, flat cell indices within the layer, area fractions)``.
    """
    nx: int
    ny: int
    n_layers: int
    chip_width_m: float
    chip_height_m: float
    gx: np.ndarray
    gy: np.ndarray
    gz: np.ndarray
    g_sink: np.ndarray
    capacity: np.ndarray
    power_map: dict
    ambient_K: float

    @property
    def shape(self):
        return (self.n_layers, self.ny, self.nx)

    @property
    def n_cells(self):
        return self.n_layers * self.ny * self.nx

    @property
    def cell_area_m2(self):
        return (self.chip_width_m / self.nx) * (self.chip_height_m / self.ny)

    @property
    def unit_names(self):
        return list(self.power_map)

    def power_vector(self, unit_powers) -> np.ndarray:
        """Per-cell injected watts for a ``{unit: watts}`` mapping."""
        p = np.zeros(self.shape)
        flat = p.reshape(self.n_layers, -1)
        for unit, watts in unit_powers.items():
            try:
                layer, cells, fracs = self.power_map[unit]
            except KeyError:
                raise UnknownUnit(f"unit {unit!r} is not a powered unit of the model") from None
            if not (watts >= 0):
                raise ValueError(f"unit {unit!r}: power must be >= 0, got {watts!r}")
            np.add.at(flat[layer], cells, watts * fracs)
        return p

    def precond_diagonal(self, extra=None) -> np.ndarray:
        """Diagonal of the full operator (sink + ``extra`` + incident links)."""
        d = self.g_sink.copy()
        if extra is not None:
            d += extra
        d[:, :, :-1] += self.gx
        d[:, :, 1:] += self.gx
        d[:, :-1, :] += self.gy
        d[:, 1:, :] += self.gy
        d[:-1] += self.gz
        d[1:] += self.gz
        return d


@dataclass(frozen=True, eq=False)
class TemperatureField:
    values: np.ndarray  # Kelvin, shape (n_layers, ny, nx)

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 3:
            raise DimensionMismatch(f"temperature field must be 3-D, got shape {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n_layers(self):
        return self.values.shape[0]

    @property
    def ny(self):
        return self.values.shape[1]

    @property
    def nx(self):
        return self.values.shape[2]

    def layer(self, index):
        return self.values[index]


def cell_overlaps(unit: FloorplanUnit, nx, ny, chip_width_m, chip_height_m):
    """Flat cell indices and overlap areas (m^2) of a unit on an nx x ny grid."""
    dx, dy = chip_width_m / nx, chip_height_m / ny
    i0 = max(int(np.floor(unit.left_m / dx)), 0)
    i1 = min(int(np.ceil(unit.right_m / dx)), nx)
    j0 = max(int(np.floor(unit.bottom_m / dy)), 0)
    j1 = min(int(np.ceil(unit.top_m / dy)), ny)
    ix = np.arange(i0, i1)
    iy = np.arange(j0, j1)
    ox = np.minimum((ix + 1) * dx, unit.right_m) - np.maximum(ix * dx, unit.left_m)
    oy = np.minimum((iy + 1) * dy, unit.top_m) - np.maximum(iy * dy, unit.bottom_m)
    area = np.outer(np.clip(oy, 0, None), np.clip(ox, 0, None))
    cells = (iy[:, None] * nx + ix[None, :]).ravel()
    area = area.ravel()
    keep = area > _MIN_OVERLAP_FRACTION * dx * dy
    return cells[keep], area[keep]


def discretize(stack: LayerStack, nx: int = 64, ny: int | None = None) -> GridModel:
    ny = nx if ny is None else ny
    if nx < 2 or ny < 2:
        raise InvalidGrid(f"grid must be at least 2x2, got {nx}x{ny}")
    W, H = stack.chip_width_m, stack.chip_height_m
    L = len(stack.layers)
    dx, dy = W / nx, H / ny
    area = dx * dy

    gx = np.zeros((L, ny, nx - 1))
    gy = np.zeros((L, ny - 1, nx))
    gz = np.zeros((L - 1, ny, nx))
    capacity = np.zeros((L, ny, nx))
    for layer in stack.layers:
        t = layer.thickness_m
        rho = layer.material.thermal_resistivity
        if layer.has_lateral:
            gx[layer.index] = t / rho * (dy / dx)
            gy[layer.index] = t / rho * (dx / dy)
        capacity[layer.index] = layer.material.volumetric_heat_capacity * t * area
    for lo, hi in zip(stack.layers[:-1], stack.layers[1:]):
        r = 0.5 * lo.material.thermal_resistivity * lo.thickness_m \
            + 0.5 * hi.material.thermal_resistivity * hi.thickness_m
        gz[lo.index] = area / r
    g_sink = np.zeros((L, ny, nx))
    g_sink[-1] = 1.0 / (stack.convection_resistance_K_per_W * nx * ny)

    power_map = {}
    for layer in stack.powered_layers():
        for unit in layer.floorplan.powered_units():
            if unit.name in power_map:
                raise ValueError(f"unit name {unit.name!r} appears on more than one powered layer")
            cells, overlap = cell_overlaps(unit, nx, ny, W, H)
            power_map[unit.name] = (layer.index, cells, overlap / overlap.sum())

    for arr in (gx, gy, gz, g_sink, capacity):
        arr.setflags(write=False)
    return GridModel(nx, ny, L, W, H, gx, gy, gz, g_sink, capacity, power_map, stack.ambient_K)
