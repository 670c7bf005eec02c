"""Steady-state and implicit-Euler transient solves, per-unit readout and
text dumps of temperature fields.
"""
from __future__ import annotations

import numpy as np

from ..errors import DimensionMismatch, ParseError, SolveFailure, UnknownUnit
from ..powertrace import PowerTrace
from ..stack import LayerStack
from .kernels import get_backend
from .model import GridModel, TemperatureField, cell_overlaps

RESIDUAL_CONTRACT = 1e-8
# the solver iterates well past the contract so that the temperatures
# themselves (not only the residual) are accurate to ~1e-9 K
INTERNAL_RTOL = 1e-12


def _solve_rise(model, diag, rhs, x0, backend):
    """Solve (G + diag) x = rhs for the temperature rise x above ambient."""
    kern = get_backend(backend)
    inv_m = 1.0 / model.precond_diagonal(diag - model.g_sink)
    maxiter = 10 * model.n_cells
    x, _, _ = kern.pcg(model.gx, model.gy, model.gz, diag, inv_m,
                       np.ascontiguousarray(rhs), np.ascontiguousarray(x0),
                       INTERNAL_RTOL, maxiter)
    return x


def _check_contract(model, diag, t_abs, rhs_abs, backend):
    """Residual of the absolute-temperature system, relative to its rhs."""
    kern = get_backend(backend)
    resid = kern.apply_operator(model.gx, model.gy, model.gz, diag, t_abs) - rhs_abs
    rel = np.linalg.norm(resid) / np.linalg.norm(rhs_abs)
    if not rel <= RESIDUAL_CONTRACT:
        raise SolveFailure(f"relative residual {rel:.3e} exceeds {RESIDUAL_CONTRACT:g}")
    return rel


def steady_state(model: GridModel, unit_powers: dict, backend: str | None = None) -> TemperatureField:
    """Solve G T = P + G_sink T_ambient.

    The system is solved for the rise above ambient (G dT = P), which has the
    same residual and makes zero power map to exactly ambient.
    """
    p = model.power_vector(unit_powers)
    rise = _solve_rise(model, model.g_sink, p, np.zeros(model.shape), backend)
    t = model.ambient_K + rise
    _check_contract(model, model.g_sink, t, p + model.g_sink * model.ambient_K, backend)
    return TemperatureField(t)


def transient(model: GridModel, trace: PowerTrace, dt_s: float = 1e-3,
              initial: TemperatureField | None = None,
              backend: str | None = None) -> list[TemperatureField]:
    """Backward-Euler steps, one per trace row:
    (C/dt + G) T_{k+1} = (C/dt) T_k + P_k + G_sink T_ambient.
    """
    if not dt_s > 0:
        raise ValueError(f"dt must be > 0, got {dt_s!r}")
    missing = [u for u in trace.unit_names if u not in model.power_map]
    if missing:
        raise UnknownUnit(f"trace units not in model: {missing}")
    c_dt = model.capacity / dt_s
    diag = model.g_sink + c_dt
    if initial is None:
        rise = np.zeros(model.shape)
    else:
        if initial.values.shape != model.shape:
            raise DimensionMismatch(f"initial field {initial.values.shape} vs model {model.shape}")
        rise = initial.values - model.ambient_K
    out = []
    for row in trace.rows:
        p = model.power_vector(dict(zip(trace.unit_names, row)))
        rhs = c_dt * rise + p
        rise = _solve_rise(model, diag, rhs, rise, backend)
        t = model.ambient_K + rise
        _check_contract(model, diag, t, rhs + diag * model.ambient_K, backend)
        out.append(TemperatureField(t))
    return out


def aggregate_per_unit(field: TemperatureField, stack: LayerStack) -> dict:
    """``{unit: (mean_K, max_K)}`` for every non-void unit, layer by layer in
    floorplan order; the mean is weighted by cell overlap area."""
    if field.n_layers != len(stack.layers):
        raise DimensionMismatch(f"field has {field.n_layers} layers, stack has {len(stack.layers)}")
    out = {}
    for layer in stack.layers:
        vals = field.layer(layer.index).ravel()
        for unit in layer.floorplan.powered_units():
            cells, area = cell_overlaps(unit, field.nx, field.ny,
                                        stack.chip_width_m, stack.chip_height_m)
            if unit.name in out:
                raise ValueError(f"unit name {unit.name!r} appears on more than one layer")
            if len(cells) == 0:
                raise DimensionMismatch(f"unit {unit.name!r} covers no cells")
            t = vals[cells]
            base = t.min()
            # deviations from the minimum keep a uniform region exact
            mean = base + np.dot(t - base, area) / area.sum()
            out[unit.name] = (float(mean), float(t.max()))
    return out


# --- text dumps -----------------------------------------------------------------

def dump_field(field: TemperatureField) -> str:
    """One ``<layer> <ix> <iy> <kelvin>`` line per cell."""
    lines = []
    for l in range(field.n_layers):
        layer = field.layer(l)
        for iy in range(field.ny):
            for ix in range(field.nx):
                lines.append(f"{l} {ix} {iy} {float(layer[iy, ix])!r}")
    return "\n".join(lines) + "\n"


def parse_field(text: str) -> TemperatureField:
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ParseError(f"expected '<layer> <ix> <iy> <kelvin>', got {line!r}", lineno)
        try:
            l, ix, iy = (int(v) for v in parts[:3])
            k = float(parts[3])
        except ValueError:
            raise ParseError(f"bad field line {line!r}", lineno) from None
        if min(l, ix, iy) < 0:
            raise ParseError("negative index", lineno)
        entries.append((l, ix, iy, k))
    if not entries:
        raise ParseError("empty temperature dump", 1)
    arr = np.array(entries)
    shape = tuple(int(arr[:, c].max()) + 1 for c in (0, 2, 1))
    values = np.full(shape, np.nan)
    values[arr[:, 0].astype(int), arr[:, 2].astype(int), arr[:, 1].astype(int)] = arr[:, 3]
    if np.isnan(values).any() or len(entries) != values.size:
        raise ParseError("temperature dump does not cover a full grid exactly once")
    return TemperatureField(values)
