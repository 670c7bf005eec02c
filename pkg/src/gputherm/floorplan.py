"""Chip-layer floorplans: generation for the Fermi die, validation, void
filling and the tab-separated ``.flp`` text format.

All lengths are in meters.  A floorplan is a list of axis-aligned named
rectangles; lower-left corner of the chip is the origin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._fmt import fmt_float
from .errors import InvalidSpec, OverlapError, ParseError

BOUNDS_TOL = 1e-12  # m
OVERLAP_TOL = 1e-18  # m^2
COVERAGE_TOL = 1e-15  # m^2

SUBUNIT_KINDS = ("RF", "EXE", "L1SHM", "SCHED", "LDST")
DEFAULT_SUBUNIT_FRACTIONS = (0.15, 0.45, 0.20, 0.10, 0.10)

DRAM_COLUMN_FRACTION = 0.1  # of chip width, per side
L2_FULL_FRACTIONS = (0.4, 0.2)  # of chip (width, height): 9.2mm x 4.6mm at 23mm
SM_BAND_FRACTION = 0.4  # of chip height, per band


@dataclass(frozen=True)
class FloorplanUnit:
    name: str
    width_m: float
    height_m: float
    left_m: float
    bottom_m: float
    is_void: bool = False

    def __post_init__(self):
        if not self.name or any(c.isspace() for c in self.name):
            raise ValueError(f"invalid unit name {self.name!r}")
        if not (self.width_m > 0 and self.height_m > 0):
            raise ValueError(f"unit {self.name}: width and height must be > 0")
        if not (math.isfinite(self.width_m) and math.isfinite(self.height_m)
                and math.isfinite(self.left_m) and math.isfinite(self.bottom_m)):
            raise ValueError(f"unit {self.name}: non-finite geometry")

    @property
    def right_m(self):
        return self.left_m + self.width_m

    @property
    def top_m(self):
        return self.bottom_m + self.height_m

    @property
    def area_m2(self):
        return self.width_m * self.height_m

    @property
    def center(self):
        return (self.left_m + 0.5 * self.width_m, self.bottom_m + 0.5 * self.height_m)

    def intersection_area(self, other: "FloorplanUnit") -> float:
        return _rect_overlap(
            self.left_m, self.bottom_m, self.right_m, self.top_m,
            other.left_m, other.bottom_m, other.right_m, other.top_m,
        )


def _rect_overlap(ax0, ay0, ax1, ay1, bx0, by0, bx1, by1):
    w = min(ax1, bx1) - max(ax0, bx0)
    h = min(ay1, by1) - max(ay0, by0)
    if w <= 0 or h <= 0:
        return 0.0
    return w * h


@dataclass(frozen=True)
class Floorplan:
    units: tuple = ()
    chip_width_m: float = 0.023
    chip_height_m: float = 0.023

    def __post_init__(self):
        object.__setattr__(self, "units", tuple(self.units))

    @property
    def chip_area_m2(self):
        return self.chip_width_m * self.chip_height_m

    @property
    def names(self):
        return [u.name for u in self.units]

    def unit(self, name: str) -> FloorplanUnit:
        for u in self.units:
            if u.name == name:
                return u
        raise KeyError(name)

    def powered_units(self):
        return [u for u in self.units if not u.is_void]

    def same_extent(self, other: "Floorplan", tol: float = BOUNDS_TOL) -> bool:
        return (abs(self.chip_width_m - other.chip_width_m) <= tol
                and abs(self.chip_height_m - other.chip_height_m) <= tol)


@dataclass(frozen=True)
class ChipSpec:
    chip_width_m: float = 0.023
    chip_height_m: float = 0.023
    sm_count: int = 16
    dram_count: int = 6
    reduced_l2: bool = False
    sm_subunit_fractions: tuple = DEFAULT_SUBUNIT_FRACTIONS

    def check(self):
        if not (self.chip_width_m > 0 and self.chip_height_m > 0):
            raise InvalidSpec("chip dimensions must be positive")
        for label, n in (("sm_count", self.sm_count), ("dram_count", self.dram_count)):
            if not isinstance(n, (int, np.integer)) or n <= 0 or n % 2:
                raise InvalidSpec(f"{label} must be a positive multiple of 2, got {n!r}")
        fr = tuple(self.sm_subunit_fractions)
        if len(fr) != len(SUBUNIT_KINDS):
            raise InvalidSpec(f"expected {len(SUBUNIT_KINDS)} sub-unit fractions, got {len(fr)}")
        if any(not (f > 0) for f in fr):
            raise InvalidSpec("sub-unit fractions must be positive")
        if abs(sum(fr) - 1.0) > 1e-12:
            raise InvalidSpec(f"sub-unit fractions sum to {sum(fr)!r}, not 1")
        return self


@dataclass
class ValidationReport:
    overlaps: list = field(default_factory=list)  # (name_a, name_b, area_m2)
    out_of_bounds: list = field(default_factory=list)
    uncovered_area_m2: float = 0.0
    duplicate_names: list = field(default_factory=list)

    @property
    def is_empty(self) -> bool:
        return (not self.overlaps and not self.out_of_bounds
                and self.uncovered_area_m2 <= COVERAGE_TOL and not self.duplicate_names)

    def __bool__(self):
        # truthy when there is something to report
        return not self.is_empty


# --- generation ------------------------------------------------------------

def l2_geometry(spec: ChipSpec):
    """(width, height, left, bottom) of the centered L2 block."""
    w = L2_FULL_FRACTIONS[0] * spec.chip_width_m
    h = L2_FULL_FRACTIONS[1] * spec.chip_height_m
    if spec.reduced_l2:
        # half of each side: one quarter of the area
        w, h = 0.5 * w, 0.5 * h
    return w, h, 0.5 * (spec.chip_width_m - w), 0.5 * (spec.chip_height_m - h)


def generate_layer0(spec: ChipSpec = ChipSpec()) -> Floorplan:
    """DRAM edge columns, a centered L2, voids everywhere else."""
    spec.check()
    W, H = spec.chip_width_m, spec.chip_height_m
    col_w = DRAM_COLUMN_FRACTION * W
    per_side = spec.dram_count // 2
    h = H / per_side
    units = []
    for side, left in (("L", 0.0), ("R", W - col_w)):
        for k in range(per_side):
            units.append(FloorplanUnit(f"DRAM_{side}{k}", col_w, h, left, k * h))
    w2, h2, x2, y2 = l2_geometry(spec)
    units.append(FloorplanUnit("L2", w2, h2, x2, y2))
    fp = fill_voids(Floorplan(units, W, H))
    _raise_if_invalid(fp)
    return fp


def generate_layer2(spec: ChipSpec = ChipSpec()) -> Floorplan:
    """Two bands of SM slots, each slot split into five stacked sub-units."""
    spec.check()
    W, H = spec.chip_width_m, spec.chip_height_m
    strip = DRAM_COLUMN_FRACTION * W
    per_band = spec.sm_count // 2
    slot_w = (W - 2 * strip) / per_band
    band_h = SM_BAND_FRACTION * H
    band_bottoms = (0.0, H - band_h)
    units = []
    for i in range(spec.sm_count):
        band, slot = divmod(i, per_band)
        x = strip + slot * slot_w
        y = band_bottoms[band]
        for kind, frac in zip(SUBUNIT_KINDS, spec.sm_subunit_fractions):
            sub_h = frac * band_h
            units.append(FloorplanUnit(f"SM{i}_{kind}", slot_w, sub_h, x, y))
            y += sub_h
    units += [
        FloorplanUnit("VOID0", strip, H, 0.0, 0.0, is_void=True),
        FloorplanUnit("VOID1", strip, H, W - strip, 0.0, is_void=True),
        FloorplanUnit("VOID2", W - 2 * strip, H - 2 * band_h, strip, band_h, is_void=True),
    ]
    fp = Floorplan(units, W, H)
    _raise_if_invalid(fp)
    return fp


def full_chip_floorplan(width_m: float, height_m: float, name: str) -> Floorplan:
    return Floorplan([FloorplanUnit(name, width_m, height_m, 0.0, 0.0)], width_m, height_m)


def _raise_if_invalid(fp):
    report = validate(fp)
    if report:
        raise InvalidSpec(f"generated floorplan failed validation: {report}")


# --- validation and void filling -------------------------------------------

def _unique_coords(values, lo, hi):
    vals = sorted(min(max(v, lo), hi) for v in list(values) + [lo, hi])
    out = [vals[0]]
    for v in vals[1:]:
        if v - out[-1] > BOUNDS_TOL:
            out.append(v)
    # keep the exact chip edges as the outermost coordinates
    out[0], out[-1] = lo, hi
    return np.array(out)


def _coverage_grid(fp: Floorplan):
    """Elementary rectangles induced by all unit edges, with a coverage mask."""
    xs = _unique_coords([c for u in fp.units for c in (u.left_m, u.right_m)], 0.0, fp.chip_width_m)
    ys = _unique_coords([c for u in fp.units for c in (u.bottom_m, u.top_m)], 0.0, fp.chip_height_m)
    cx = 0.5 * (xs[:-1] + xs[1:])
    cy = 0.5 * (ys[:-1] + ys[1:])
    covered = np.zeros((len(cx), len(cy)), dtype=bool)
    for u in fp.units:
        inx = (cx > u.left_m) & (cx < u.right_m)
        iny = (cy > u.bottom_m) & (cy < u.top_m)
        covered |= np.outer(inx, iny)
    return xs, ys, covered


def validate(fp: Floorplan) -> ValidationReport:
    report = ValidationReport()
    seen = set()
    for u in fp.units:
        if u.name in seen and u.name not in report.duplicate_names:
            report.duplicate_names.append(u.name)
        seen.add(u.name)
        if (u.left_m < -BOUNDS_TOL or u.bottom_m < -BOUNDS_TOL
                or u.right_m > fp.chip_width_m + BOUNDS_TOL
                or u.top_m > fp.chip_height_m + BOUNDS_TOL):
            report.out_of_bounds.append(u.name)
    units = fp.units
    for i in range(len(units)):
        for j in range(i + 1, len(units)):
            area = units[i].intersection_area(units[j])
            if area > OVERLAP_TOL:
                report.overlaps.append((units[i].name, units[j].name, area))
    if fp.chip_width_m > 0 and fp.chip_height_m > 0:
        xs, ys, covered = _coverage_grid(fp)
        cell_area = np.outer(np.diff(xs), np.diff(ys))
        report.uncovered_area_m2 = float(cell_area[~covered].sum())
    return report


def fill_voids(fp: Floorplan) -> Floorplan:
    """Add VOIDn rectangles covering every uncovered part of the chip.

    Uncovered elementary rectangles are merged vertically inside each
    x-interval, so each emitted void spans a maximal uncovered run.
    """
    overlaps = validate(fp).overlaps
    if overlaps:
        raise OverlapError(f"cannot fill voids with overlapping units: {overlaps}")
    xs, ys, covered = _coverage_grid(fp)
    taken = {u.name for u in fp.units}
    counter = 0
    new_units = []

    def next_name():
        nonlocal counter
        while f"VOID{counter}" in taken:
            counter += 1
        name = f"VOID{counter}"
        taken.add(name)
        return name

    for i in range(len(xs) - 1):
        j = 0
        while j < len(ys) - 1:
            if covered[i, j]:
                j += 1
                continue
            start = j
            while j < len(ys) - 1 and not covered[i, j]:
                j += 1
            new_units.append(FloorplanUnit(
                next_name(), float(xs[i + 1] - xs[i]), float(ys[j] - ys[start]),
                float(xs[i]), float(ys[start]), is_void=True,
            ))
    if not new_units:
        return fp
    return replace(fp, units=fp.units + tuple(new_units))


# --- .flp text format --------------------------------------------------------

def parse_flp(text: str) -> Floorplan:
    units = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 5:
            raise ParseError(f"expected 5 fields, got {len(fields)}", lineno)
        name = fields[0]
        try:
            w, h, x, y = (float(f) for f in fields[1:])
        except ValueError:
            raise ParseError(f"non-numeric field in {line!r}", lineno) from None
        if not all(math.isfinite(v) for v in (w, h, x, y)):
            raise ParseError("non-finite value", lineno)
        if w <= 0 or h <= 0:
            raise ParseError(f"unit {name}: width and height must be > 0", lineno)
        if x < 0 or y < 0:
            raise ParseError(f"unit {name}: negative position", lineno)
        units.append(FloorplanUnit(name, w, h, x, y, is_void=name.startswith("VOID")))
    # the extent is the largest edge; x + w picks up an ulp of round-off that
    # 15 significant digits strips while staying far inside BOUNDS_TOL
    width = _snap(max((u.right_m for u in units), default=0.0))
    height = _snap(max((u.top_m for u in units), default=0.0))
    return Floorplan(units, width, height)


def _snap(v):
    return float(f"{v:.15g}")


def serialize_flp(fp: Floorplan) -> str:
    return "".join(
        "\t".join([u.name] + [fmt_float(v) for v in (u.width_m, u.height_m, u.left_m, u.bottom_m)]) + "\n"
        for u in fp.units
    )


def read_flp(path) -> Floorplan:
    with open(path) as f:
        return parse_flp(f.read())


def write_flp(fp: Floorplan, path) -> None:
    with open(path, "w") as f:
        f.write(serialize_flp(fp))
