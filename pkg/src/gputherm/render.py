"""Heat-map rasterization (binary PPM) and per-unit CSV export."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import BadLayerIndex, GpuThermError
from .floorplan import Floorplan
from .thermal.model import TemperatureField

DEFAULT_STOPS = ((0, 0, 255), (0, 255, 0), (255, 0, 0))


class IoError(GpuThermError):
    pass


@dataclass(frozen=True)
class ColorScale:
    t_min_K: float
    t_max_K: float
    stops: tuple = DEFAULT_STOPS

    def __post_init__(self):
        if not (self.t_min_K < self.t_max_K):
            raise ValueError(f"t_min ({self.t_min_K}) must be < t_max ({self.t_max_K})")
        if len(self.stops) < 2:
            raise ValueError("a color scale needs at least 2 stops")

    @classmethod
    def auto(cls, values, stops=DEFAULT_STOPS):
        lo, hi = float(np.min(values)), float(np.max(values))
        if not lo < hi:
            hi = lo + 1.0
        return cls(lo, hi, stops)

    def colors(self, temps) -> np.ndarray:
        """uint8 RGB for an array of temperatures; out-of-range values clamp."""
        f = np.clip((np.asarray(temps, dtype=np.float64) - self.t_min_K)
                    / (self.t_max_K - self.t_min_K), 0.0, 1.0)
        stops = np.asarray(self.stops, dtype=np.float64)
        nseg = len(stops) - 1
        pos = f * nseg
        seg = np.minimum(pos.astype(np.int64), nseg - 1)
        frac = (pos - seg)[..., None]
        rgb = stops[seg] + (stops[seg + 1] - stops[seg]) * frac
        return np.floor(rgb + 0.5).astype(np.uint8)


@dataclass(frozen=True, eq=False)
class HeatmapImage:
    width_px: int
    height_px: int
    pixels: np.ndarray  # uint8, shape (height, width, 3), top row first

    def to_ppm(self) -> bytes:
        header = f"P6\n{self.width_px} {self.height_px}\n255\n".encode("ascii")
        return header + np.ascontiguousarray(self.pixels, dtype=np.uint8).tobytes()


def _draw_overlay(pixels, overlay: Floorplan):
    h, w = pixels.shape[:2]

    def px(v, extent, n):
        return min(max(int(round(v / extent * n)), 0), n - 1)

    for u in overlay.units:
        x0 = px(u.left_m, overlay.chip_width_m, w)
        x1 = px(u.right_m, overlay.chip_width_m, w)
        # image rows grow downward
        y0 = h - 1 - px(u.top_m, overlay.chip_height_m, h)
        y1 = h - 1 - px(u.bottom_m, overlay.chip_height_m, h)
        pixels[y0:y1 + 1, x0] = 0
        pixels[y0:y1 + 1, x1] = 0
        pixels[y0, x0:x1 + 1] = 0
        pixels[y1, x0:x1 + 1] = 0


def render_layer(field: TemperatureField, layer: int = 2, scale: ColorScale | None = None,
                 px_per_cell: int = 8, overlay: Floorplan | None = None) -> HeatmapImage:
    if not 0 <= layer < field.n_layers:
        raise BadLayerIndex(f"layer {layer} not in [0, {field.n_layers - 1}]")
    if int(px_per_cell) != px_per_cell or px_per_cell < 1:
        raise ValueError(f"px_per_cell must be an integer >= 1, got {px_per_cell!r}")
    temps = field.layer(layer)
    scale = scale or ColorScale.auto(temps)
    rgb = scale.colors(temps)[::-1]  # iy = 0 is the chip bottom
    pixels = np.repeat(np.repeat(rgb, px_per_cell, axis=0), px_per_cell, axis=1)
    if overlay is not None:
        _draw_overlay(pixels, overlay)
    return HeatmapImage(pixels.shape[1], pixels.shape[0], pixels)


def write_image(img: HeatmapImage, path) -> None:
    try:
        with open(path, "wb") as f:
            f.write(img.to_ppm())
    except OSError as exc:
        raise IoError(f"cannot write image {path}: {exc}") from exc


def read_ppm(path) -> HeatmapImage:
    with open(path, "rb") as f:
        data = f.read()
    magic, dims, maxval, rest = data.split(b"\n", 3)
    if magic != b"P6" or maxval != b"255":
        raise ValueError("not an 8-bit binary PPM")
    w, h = (int(v) for v in dims.split())
    pixels = np.frombuffer(rest, dtype=np.uint8).reshape(h, w, 3)
    return HeatmapImage(w, h, pixels)


def export_unit_csv(aggregates: dict, path) -> None:
    """``unit,mean_K,max_K`` rows, 6 decimals, in the aggregate's order."""
    try:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["unit", "mean_K", "max_K"])
            for unit, (mean_k, max_k) in aggregates.items():
                writer.writerow([unit, f"{mean_k:.6f}", f"{max_k:.6f}"])
    except OSError as exc:
        raise IoError(f"cannot write CSV {path}: {exc}") from exc


def read_unit_csv(path) -> dict:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows or rows[0] != ["unit", "mean_K", "max_K"]:
        raise ValueError(f"{path}: missing unit,mean_K,max_K header")
    out = {}
    for unit, mean_k, max_k in rows[1:]:
        mean_v, max_v = float(mean_k), float(max_k)
        if not (math.isfinite(mean_v) and math.isfinite(max_v)):
            raise ValueError(f"{path}: non-finite temperature for {unit}")
        out[unit] = (mean_v, max_v)
    return out
