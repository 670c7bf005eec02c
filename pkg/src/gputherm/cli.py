"""Command-line entry point: ``gputherm <subcommand>``.

Usage errors exit 2 (click's convention); stage failures print one JSON
object to stderr and exit 1.
"""
from __future__ import annotations

import functools
import json
import os
import sys

import click

from .errors import GpuThermError
from .fixtures import KERNELS, Scenario, fixture_report
from .floorplan import ChipSpec, generate_layer0, generate_layer2, read_flp, write_flp
from .pipeline import PipelineConfig, load_config, run_pipeline
from .powertrace import (default_mapping, load_mapping, map_to_units, parse_power_report,
                         read_ptrace, serialize_power_report, serialize_ptrace)
from .render import ColorScale, export_unit_csv, render_layer, write_image
from .stack import AMBIENT_K, CONVECTION_RESISTANCE, load_stack
from .thermal import aggregate_per_unit, discretize, dump_field, parse_field, steady_state, transient


def _fail(stage, exc):
    err = {
        "error": type(exc).__name__,
        "stage": getattr(exc, "stage", None) or stage,
        "message": str(exc),
    }
    click.echo(json.dumps(err, sort_keys=True), err=True)
    sys.exit(1)


def stage_command(stage):
    """Turn library/IO failures inside a subcommand into exit code 1."""
    def wrap(fn):
        @functools.wraps(fn)
        def inner(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except (GpuThermError, OSError, ValueError) as exc:
                _fail(stage, exc)
        return inner
    return wrap


@click.group()
def main():
    """Fermi GPU floorplan, power-trace and thermal toolchain."""


@main.command("gen-flp")
@click.option("--layer", type=click.Choice(["0", "2"]), required=True,
              help="Powered floorplan layer to generate.")
@click.option("--reduced-l2", is_flag=True, help="Quarter-area L2 block (layer 0).")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@stage_command("gen-flp")
def gen_flp(layer, reduced_l2, out):
    spec = ChipSpec(reduced_l2=reduced_l2)
    fp = generate_layer0(spec) if layer == "0" else generate_layer2(spec)
    write_flp(fp, out)


@main.command("gen-ptrace")
@click.option("--report", type=click.Path(dir_okay=False), required=True)
@click.option("--mapping", type=click.Path(dir_okay=False), default=None,
              help="Component mapping file; the built-in table when omitted.")
@click.option("--flp0", type=click.Path(dir_okay=False), required=True)
@click.option("--flp2", type=click.Path(dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@stage_command("gen-ptrace")
def gen_ptrace(report, mapping, flp0, flp2, out):
    fp0, fp2 = read_flp(flp0), read_flp(flp2)
    with open(report) as f:
        rep = parse_power_report(f.read())
    mp = load_mapping(mapping) if mapping else default_mapping(fp0)
    trace = map_to_units(rep, mp, fp0, fp2)
    with open(out, "w") as f:
        f.write(serialize_ptrace(trace))


@main.command("solve")
@click.option("--lcf", type=click.Path(dir_okay=False), required=True)
@click.option("--ptrace", type=click.Path(dir_okay=False), required=True)
@click.option("--grid", type=click.IntRange(min=2), default=64, show_default=True)
@click.option("--transient", "do_transient", is_flag=True, help="Also step through every trace row.")
@click.option("--dt", type=click.FloatRange(min=0, min_open=True), default=1e-3, show_default=True)
@click.option("--ambient", type=float, default=AMBIENT_K, show_default=True)
@click.option("--r-convec", type=click.FloatRange(min=0, min_open=True),
              default=CONVECTION_RESISTANCE, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
@stage_command("solve")
def solve(lcf, ptrace, grid, do_transient, dt, ambient, r_convec, out):
    """Steady state from the per-unit mean of the trace rows."""
    stack = load_stack(lcf, ambient, r_convec)
    trace = read_ptrace(ptrace)
    model = discretize(stack, grid, grid)
    os.makedirs(out, exist_ok=True)
    field = steady_state(model, trace.mean_powers())
    with open(os.path.join(out, "temps.txt"), "w") as f:
        f.write(dump_field(field))
    export_unit_csv(aggregate_per_unit(field, stack), os.path.join(out, "units.csv"))
    if do_transient:
        for k, fld in enumerate(transient(model, trace, dt)):
            with open(os.path.join(out, f"transient_step{k}.txt"), "w") as f:
                f.write(dump_field(fld))


@main.command("render")
@click.option("--temps", type=click.Path(dir_okay=False), required=True)
@click.option("--flp", type=click.Path(dir_okay=False), required=True,
              help="Floorplan drawn as an overlay.")
@click.option("--layer", type=click.IntRange(min=0), default=2, show_default=True)
@click.option("--tmin", type=float, default=None)
@click.option("--tmax", type=float, default=None)
@click.option("--px", type=click.IntRange(min=1), default=4, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@stage_command("render")
def render(temps, flp, layer, tmin, tmax, px, out):
    if (tmin is None) != (tmax is None):
        raise click.UsageError("--tmin and --tmax must be given together")
    with open(temps) as f:
        field = parse_field(f.read())
    scale = ColorScale(tmin, tmax) if tmin is not None else None
    write_image(render_layer(field, layer, scale, px, read_flp(flp)), out)


@main.command("fixture")
@click.option("--kernel", type=click.Choice(KERNELS), required=True)
@click.option("--size", type=click.IntRange(min=1), required=True)
@click.option("--reduced-l2", is_flag=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@stage_command("fixture")
def fixture(kernel, size, reduced_l2, out):
    rep = fixture_report(Scenario(kernel, size, reduced_l2))
    with open(out, "w") as f:
        f.write(serialize_power_report(rep))


@main.command("pipeline")
@click.option("--kernel", type=click.Choice(KERNELS), required=True)
@click.option("--size", type=click.IntRange(min=1), required=True)
@click.option("--reduced-l2", is_flag=True)
@click.option("--config", type=click.Path(dir_okay=False), default=None)
@click.option("--report", type=click.Path(dir_okay=False), default=None,
              help="Use this power report instead of the synthetic fixture.")
@click.option("--out", type=click.Path(file_okay=False), required=True)
@stage_command("pipeline")
def pipeline(kernel, size, reduced_l2, config, report, out):
    cfg = load_config(config) if config else PipelineConfig()
    if report:
        cfg.report = os.path.abspath(report)
    run_pipeline(Scenario(kernel, size, reduced_l2), cfg, out)


if __name__ == "__main__":
    main()
