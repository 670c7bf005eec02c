"""The four-layer Si|TIM|Si|TIM stack and its layer-configuration (.lcf) file."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace

from ._fmt import fmt_float
from .errors import InvalidSpec, MismatchedExtent, ParseError
from .floorplan import Floorplan, full_chip_floorplan, read_flp


@dataclass(frozen=True)
class MaterialProps:
    volumetric_heat_capacity: float  # J/(m^3 K)
    thermal_resistivity: float  # m K / W

    def __post_init__(self):
        for label, v in (("volumetric_heat_capacity", self.volumetric_heat_capacity),
                         ("thermal_resistivity", self.thermal_resistivity)):
            if not (math.isfinite(v) and v > 0):
                raise InvalidSpec(f"{label} must be finite and > 0, got {v!r}")


SILICON = MaterialProps(1.75e6, 0.01)
TIM = MaterialProps(4.0e6, 0.25)
SILICON_THICKNESS_M = 1.5e-4
TIM_THICKNESS_M = 2.0e-5
AMBIENT_K = 318.15
CONVECTION_RESISTANCE = 0.1  # K/W


@dataclass(frozen=True)
class Layer:
    index: int
    material: MaterialProps
    thickness_m: float
    has_power: bool
    has_lateral: bool
    floorplan: Floorplan

    def __post_init__(self):
        if not (math.isfinite(self.thickness_m) and self.thickness_m > 0):
            raise InvalidSpec(f"layer {self.index}: thickness must be > 0")


@dataclass(frozen=True)
class LayerStack:
    layers: tuple
    ambient_K: float = AMBIENT_K
    convection_resistance_K_per_W: float = CONVECTION_RESISTANCE

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if len(self.layers) != 4:
            raise InvalidSpec(f"expected 4 layers, got {len(self.layers)}")
        for i, layer in enumerate(self.layers):
            if layer.index != i:
                raise InvalidSpec(f"layer at position {i} has index {layer.index}")
            # silicon (powered) on 0 and 2, TIM (unpowered) on 1 and 3
            if layer.has_power != (i % 2 == 0):
                raise InvalidSpec(f"layer {i}: power flag must be {'Y' if i % 2 == 0 else 'N'}")
        fp0 = self.layers[0].floorplan
        for layer in self.layers[1:]:
            if not layer.floorplan.same_extent(fp0):
                raise MismatchedExtent(f"layer {layer.index} floorplan extent differs from layer 0")
        if not (self.convection_resistance_K_per_W > 0):
            raise InvalidSpec("convection resistance must be > 0")
        if not math.isfinite(self.ambient_K):
            raise InvalidSpec("ambient temperature must be finite")

    @property
    def chip_width_m(self):
        return self.layers[0].floorplan.chip_width_m

    @property
    def chip_height_m(self):
        return self.layers[0].floorplan.chip_height_m

    def powered_layers(self):
        return [layer for layer in self.layers if layer.has_power]


def build_fermi_stack(fp0: Floorplan, fp2: Floorplan, *, silicon: MaterialProps = SILICON,
                      tim: MaterialProps = TIM, silicon_thickness_m: float = SILICON_THICKNESS_M,
                      tim_thickness_m: float = TIM_THICKNESS_M, thickness: dict | None = None,
                      material: dict | None = None, ambient_K: float = AMBIENT_K,
                      convection_resistance_K_per_W: float = CONVECTION_RESISTANCE) -> LayerStack:
    """Canonical stack: silicon(fp0) | TIM | silicon(fp2) | TIM, sink on top.

    ``thickness`` and ``material`` map a layer index to a per-layer override.
    """
    if not fp0.same_extent(fp2):
        raise MismatchedExtent(
            f"layer floorplans differ in extent: {fp0.chip_width_m}x{fp0.chip_height_m} "
            f"vs {fp2.chip_width_m}x{fp2.chip_height_m}")
    W, H = fp0.chip_width_m, fp0.chip_height_m
    thickness = thickness or {}
    material = material or {}
    plan = [
        (silicon, silicon_thickness_m, True, fp0),
        (tim, tim_thickness_m, False, full_chip_floorplan(W, H, "TIM1")),
        (silicon, silicon_thickness_m, True, fp2),
        (tim, tim_thickness_m, False, full_chip_floorplan(W, H, "TIM3")),
    ]
    layers = [
        Layer(i, material.get(i, mat), thickness.get(i, t), power, True, fp)
        for i, (mat, t, power, fp) in enumerate(plan)
    ]
    return LayerStack(layers, ambient_K, convection_resistance_K_per_W)


# --- .lcf format --------------------------------------------------------------

@dataclass(frozen=True)
class LayerDescriptor:
    index: int
    has_lateral: bool
    has_power: bool
    volumetric_heat_capacity: float
    thermal_resistivity: float
    thickness_m: float
    floorplan_path: str


def _flag(token, lineno):
    if token == "Y":
        return True
    if token == "N":
        return False
    raise ParseError(f"expected flag Y or N, got {token!r}", lineno)


def _positive(token, lineno):
    try:
        v = float(token)
    except ValueError:
        raise ParseError(f"non-numeric value {token!r}", lineno) from None
    if not (math.isfinite(v) and v > 0):
        raise ParseError(f"value must be finite and > 0, got {token!r}", lineno)
    return v


def parse_lcf(text: str) -> list[LayerDescriptor]:
    lines = [(n, raw.strip()) for n, raw in enumerate(text.splitlines(), start=1)]
    lines = [(n, s) for n, s in lines if s and not s.startswith("#")]
    if len(lines) % 7:
        last = lines[-1][0] if lines else 0
        raise ParseError(f"{len(lines)} data lines is not a whole number of 7-field records", last)
    out = []
    for r in range(0, len(lines), 7):
        rec = lines[r:r + 7]
        n0, tok = rec[0]
        try:
            index = int(tok)
        except ValueError:
            raise ParseError(f"layer number must be an integer, got {tok!r}", n0) from None
        if index < 0:
            raise ParseError("layer number must be >= 0", n0)
        path = rec[6][1]
        if len(path.split()) != 1:
            raise ParseError(f"floorplan path must be one token, got {path!r}", rec[6][0])
        out.append(LayerDescriptor(
            index,
            _flag(rec[1][1], rec[1][0]),
            _flag(rec[2][1], rec[2][0]),
            _positive(rec[3][1], rec[3][0]),
            _positive(rec[4][1], rec[4][0]),
            _positive(rec[5][1], rec[5][0]),
            path,
        ))
    return out


def stack_descriptors(stack: LayerStack, flp_paths=None) -> list[LayerDescriptor]:
    flp_paths = flp_paths or [f"layer{i}.flp" for i in range(len(stack.layers))]
    return [
        LayerDescriptor(layer.index, layer.has_lateral, layer.has_power,
                        layer.material.volumetric_heat_capacity,
                        layer.material.thermal_resistivity, layer.thickness_m, path)
        for layer, path in zip(stack.layers, flp_paths)
    ]


def serialize_lcf(stack, flp_paths=None) -> str:
    """Accepts a LayerStack or a list of LayerDescriptor."""
    descs = stack_descriptors(stack, flp_paths) if isinstance(stack, LayerStack) else list(stack)
    chunks = []
    for d in descs:
        chunks.append("\n".join([
            f"# Layer {d.index}",
            str(d.index),
            "Y" if d.has_lateral else "N",
            "Y" if d.has_power else "N",
            fmt_float(d.volumetric_heat_capacity),
            fmt_float(d.thermal_resistivity),
            fmt_float(d.thickness_m),
            d.floorplan_path,
        ]) + "\n")
    return "\n".join(chunks)


def load_stack(lcf_path, ambient_K: float = AMBIENT_K,
               convection_resistance_K_per_W: float = CONVECTION_RESISTANCE) -> LayerStack:
    """Read an .lcf file; floorplan paths resolve relative to its directory."""
    with open(lcf_path) as f:
        descs = parse_lcf(f.read())
    base = os.path.dirname(os.path.abspath(lcf_path))
    layers = []
    for pos, d in enumerate(sorted(descs, key=lambda d: d.index)):
        if d.index != pos:
            raise ParseError(f"layer numbers must be 0..{len(descs) - 1}, missing {pos}")
        fp = read_flp(os.path.join(base, d.floorplan_path))
        layers.append(Layer(d.index, MaterialProps(d.volumetric_heat_capacity, d.thermal_resistivity),
                            d.thickness_m, d.has_power, d.has_lateral, fp))
    return LayerStack(layers, ambient_K, convection_resistance_K_per_W)


def with_layer(stack: LayerStack, index: int, **changes) -> LayerStack:
    layers = list(stack.layers)
    layers[index] = replace(layers[index], **changes)
    return replace(stack, layers=tuple(layers))
