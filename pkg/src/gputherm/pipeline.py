"""End-to-end run: floorplans -> power trace -> thermal solve -> heat maps."""
from __future__ import annotations

import hashlib
import json
import os
import platform
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import __version__
from .errors import ConfigError, GpuThermError
from .fixtures import Scenario, fixture_report
from .floorplan import ChipSpec, generate_layer0, generate_layer2, write_flp
from .powertrace import (default_mapping, load_mapping, map_to_units, parse_power_report,
                         serialize_power_report, serialize_ptrace)
from .render import ColorScale, export_unit_csv, render_layer, write_image
from .stack import MaterialProps, build_fermi_stack, serialize_lcf
from .thermal import aggregate_per_unit, discretize, dump_field, steady_state, transient
from .thermal.kernels import BACKEND


@dataclass
class PipelineConfig:
    grid_nx: int = 64
    grid_ny: int = 64
    dt: float = 1e-3
    transient: bool = False
    mapping: str | None = None
    report: str | None = None
    tmin: float | None = None
    tmax: float | None = None
    px: int = 4
    overlay: bool = True
    chip_width_m: float = 0.023
    chip_height_m: float = 0.023
    sm_count: int = 16
    dram_count: int = 6
    sm_subunit_fractions: tuple = (0.15, 0.45, 0.20, 0.10, 0.10)
    ambient_K: float = 318.15
    convection_resistance: float = 0.1
    silicon_resistivity: float = 0.01
    silicon_heat_capacity: float = 1.75e6
    silicon_thickness: float = 1.5e-4
    tim_resistivity: float = 0.25
    tim_heat_capacity: float = 4.0e6
    tim_thickness: float = 2.0e-5
    source: str | None = field(default=None, compare=False)

    def chip_spec(self, reduced_l2: bool) -> ChipSpec:
        return ChipSpec(self.chip_width_m, self.chip_height_m, self.sm_count, self.dram_count,
                        reduced_l2, tuple(self.sm_subunit_fractions))

    def check(self):
        if self.grid_nx < 2 or self.grid_ny < 2:
            raise ConfigError("grid must be at least 2x2")
        if not self.dt > 0:
            raise ConfigError("dt must be > 0")
        if self.px < 1:
            raise ConfigError("px must be >= 1")
        if (self.tmin is None) != (self.tmax is None):
            raise ConfigError("tmin and tmax must be given together")
        if self.tmin is not None and not self.tmin < self.tmax:
            raise ConfigError("tmin must be < tmax")
        return self


def _parse_bool(v):
    low = v.lower()
    if low in ("1", "true", "yes", "on", "y"):
        return True
    if low in ("0", "false", "no", "off", "n"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def parse_config(text: str, base_dir: str = ".") -> PipelineConfig:
    """Flat ``key = value`` lines; ``#`` starts a comment.  ``grid`` sets both
    axes; relative paths resolve against ``base_dir``."""
    cfg = PipelineConfig()
    types = {f.name: f.type for f in fields(PipelineConfig)}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        try:
            if key == "grid":
                cfg.grid_nx = cfg.grid_ny = int(value)
            elif key in ("mapping", "report"):
                setattr(cfg, key, os.path.normpath(os.path.join(base_dir, value)))
            elif key == "sm_subunit_fractions":
                cfg.sm_subunit_fractions = tuple(float(v) for v in value.split(","))
            elif key in types and key != "source":
                t = types[key]
                if "bool" in t:
                    setattr(cfg, key, _parse_bool(value))
                elif "int" in t:
                    setattr(cfg, key, int(value))
                else:
                    setattr(cfg, key, float(value))
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    return cfg.check()


def load_config(path) -> PipelineConfig:
    try:
        with open(path) as f:
            text = f.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    cfg = parse_config(text, os.path.dirname(os.path.abspath(path)))
    cfg.source = os.path.abspath(path)
    return cfg


@contextmanager
def stage(name):
    try:
        yield
    except GpuThermError as exc:
        if exc.stage is None:
            exc.stage = name
        raise
    except (OSError, ValueError) as exc:
        wrapped = GpuThermError(f"{type(exc).__name__}: {exc}")
        wrapped.stage = name
        raise wrapped from exc


def _sha256(path):
    with open(path, "rb") as f:
        return hashlib.sha256(f.read()).hexdigest()


def run_pipeline(s: Scenario, cfg: PipelineConfig, out_dir) -> dict:
    """Write the full output bundle into ``out_dir``; returns the manifest."""
    cfg.check()
    os.makedirs(out_dir, exist_ok=True)
    spec = cfg.chip_spec(s.reduced_l2)
    written = []

    def out(name):
        written.append(name)
        return os.path.join(out_dir, name)

    with stage("gen-flp"):
        fp0, fp2 = generate_layer0(spec), generate_layer2(spec)
        stack = build_fermi_stack(
            fp0, fp2,
            silicon=MaterialProps(cfg.silicon_heat_capacity, cfg.silicon_resistivity),
            tim=MaterialProps(cfg.tim_heat_capacity, cfg.tim_resistivity),
            silicon_thickness_m=cfg.silicon_thickness, tim_thickness_m=cfg.tim_thickness,
            ambient_K=cfg.ambient_K, convection_resistance_K_per_W=cfg.convection_resistance,
        )
        flp_names = [f"layer{i}.flp" for i in range(len(stack.layers))]
        for layer, name in zip(stack.layers, flp_names):
            write_flp(layer.floorplan, out(name))
        with open(out("stack.lcf"), "w") as f:
            f.write(serialize_lcf(stack, flp_names))

    with stage("gen-ptrace"):
        if cfg.report:
            with open(cfg.report) as f:
                report = parse_power_report(f.read())
        else:
            report = fixture_report(s, spec)
        with open(out("report.txt"), "w") as f:
            f.write(serialize_power_report(report))
        mapping = load_mapping(cfg.mapping) if cfg.mapping else default_mapping(fp0)
        trace = map_to_units(report, mapping, fp0, fp2)
        with open(out("power.ptrace"), "w") as f:
            f.write(serialize_ptrace(trace))

    with stage("solve"):
        model = discretize(stack, cfg.grid_nx, cfg.grid_ny)
        field_ss = steady_state(model, trace.mean_powers())
        with open(out("temps.txt"), "w") as f:
            f.write(dump_field(field_ss))
        if cfg.transient:
            for k, fld in enumerate(transient(model, trace, cfg.dt)):
                with open(out(f"transient_step{k}.txt"), "w") as f:
                    f.write(dump_field(fld))

    with stage("render"):
        for layer in stack.layers:
            if cfg.tmin is not None:
                scale = ColorScale(cfg.tmin, cfg.tmax)
            else:
                scale = ColorScale.auto(field_ss.layer(layer.index))
            img = render_layer(field_ss, layer.index, scale, cfg.px,
                               layer.floorplan if cfg.overlay else None)
            write_image(img, out(f"layer{layer.index}.ppm"))
        export_unit_csv(aggregate_per_unit(field_ss, stack), out("units.csv"))

    params = asdict(cfg)
    params.pop("source")
    params["sm_subunit_fractions"] = list(params["sm_subunit_fractions"])
    manifest = {
        "scenario": asdict(s),
        "inputs": {
            "config": cfg.source,
            "report": os.path.abspath(cfg.report) if cfg.report else None,
            "mapping": os.path.abspath(cfg.mapping) if cfg.mapping else None,
        },
        "parameters": params,
        "versions": {
            "gputherm": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
            "kernel_backend": BACKEND,
        },
        "outputs": {name: _sha256(os.path.join(out_dir, name)) for name in sorted(written)},
    }
    with open(os.path.join(out_dir, "run_manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return manifest
