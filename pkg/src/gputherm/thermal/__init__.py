"""Compact grid thermal model: discretization, solves and per-unit readout."""
from .kernels import BACKEND
from .model import GridModel, TemperatureField, cell_overlaps, discretize
from .solve import aggregate_per_unit, dump_field, parse_field, steady_state, transient

__all__ = [
    "BACKEND", "GridModel", "TemperatureField", "aggregate_per_unit", "cell_overlaps",
    "discretize", "dump_field", "parse_field", "steady_state", "transient",
]
