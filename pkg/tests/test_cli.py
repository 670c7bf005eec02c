import json

import pytest
from click.testing import CliRunner

from gputherm.cli import main
from gputherm.floorplan import generate_layer0, parse_flp, validate
from gputherm.powertrace import parse_power_report, parse_ptrace
from gputherm.render import read_ppm, read_unit_csv
from gputherm.thermal import parse_field


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, *args):
    return runner.invoke(main, [str(a) for a in args])


def test_gen_flp(runner, tmp_path):
    out = tmp_path / "l0.flp"
    res = invoke(runner, "gen-flp", "--layer", 0, "--reduced-l2", "--out", out)
    assert res.exit_code == 0, res.output
    fp = parse_flp(out.read_text())
    assert validate(fp).is_empty
    assert fp.unit("L2").width_m == pytest.approx(0.0046)


def test_gen_flp_layer1_is_usage_error(runner, tmp_path):
    res = invoke(runner, "gen-flp", "--layer", 1, "--out", tmp_path / "x")
    assert res.exit_code == 2


def test_fixture(runner, tmp_path):
    out = tmp_path / "r.txt"
    res = invoke(runner, "fixture", "--kernel", "matmul_linear", "--size", 800, "--out", out)
    assert res.exit_code == 0
    rep = parse_power_report(out.read_text())
    assert "DRAM_L1P" in rep.components
    assert invoke(runner, "fixture", "--kernel", "nope", "--size", 8, "--out", out).exit_code == 2
    assert invoke(runner, "fixture", "--kernel", "matmul_linear", "--size", 0, "--out", out).exit_code == 2


def test_stagewise_flow(runner, tmp_path):
    """gen-flp -> fixture -> gen-ptrace -> solve -> render through the CLI only."""
    d = tmp_path
    assert invoke(runner, "gen-flp", "--layer", 0, "--out", d / "layer0.flp").exit_code == 0
    assert invoke(runner, "gen-flp", "--layer", 2, "--out", d / "layer2.flp").exit_code == 0
    for i in (1, 3):
        (d / f"layer{i}.flp").write_text(f"TIM{i}\t0.023\t0.023\t0\t0\n")
    lcf = "".join(f"{i}\nY\n{'Y' if i % 2 == 0 else 'N'}\n{c}\n{r}\n{t}\nlayer{i}.flp\n"
                  for i, (c, r, t) in enumerate([(1.75e6, 0.01, 1.5e-4), (4e6, 0.25, 2e-5)] * 2))
    (d / "stack.lcf").write_text(lcf)
    assert invoke(runner, "fixture", "--kernel", "matmul_tiled", "--size", 250,
                  "--out", d / "r.txt").exit_code == 0
    res = invoke(runner, "gen-ptrace", "--report", d / "r.txt", "--flp0", d / "layer0.flp",
                 "--flp2", d / "layer2.flp", "--out", d / "p.ptrace")
    assert res.exit_code == 0, res.output
    assert len(parse_ptrace((d / "p.ptrace").read_text()).rows) == 5
    res = invoke(runner, "solve", "--lcf", d / "stack.lcf", "--ptrace", d / "p.ptrace", "--grid", 16,
                 "--transient", "--dt", 0.01, "--out", d / "sol")
    assert res.exit_code == 0, res.output
    field = parse_field((d / "sol" / "temps.txt").read_text())
    assert field.values.shape == (4, 16, 16) and field.values.min() >= 318.15
    assert len(list((d / "sol").glob("transient_step*.txt"))) == 5
    assert "SM0_EXE" in read_unit_csv(d / "sol" / "units.csv")
    res = invoke(runner, "render", "--temps", d / "sol" / "temps.txt", "--flp", d / "layer2.flp",
                 "--px", 3, "--tmin", 318, "--tmax", 340, "--out", d / "l2.ppm")
    assert res.exit_code == 0, res.output
    img = read_ppm(d / "l2.ppm")
    assert (img.width_px, img.height_px) == (48, 48)


def test_gen_ptrace_with_mapping_file(runner, tmp_path):
    from gputherm.floorplan import generate_layer2, write_flp
    write_flp(generate_layer0(), tmp_path / "l0.flp")
    write_flp(generate_layer2(), tmp_path / "l2.flp")
    (tmp_path / "r.txt").write_text("FOO = 1 2 3\n")
    (tmp_path / "m.map").write_text("FOO -> unit L2\n")
    res = invoke(runner, "gen-ptrace", "--report", tmp_path / "r.txt", "--mapping", tmp_path / "m.map",
                 "--flp0", tmp_path / "l0.flp", "--flp2", tmp_path / "l2.flp", "--out", tmp_path / "p")
    assert res.exit_code == 0
    assert parse_ptrace((tmp_path / "p").read_text()).column("L2") == [1, 2, 2, 2, 3]


def test_stage_failure_is_json_exit_1(runner, tmp_path):
    (tmp_path / "bad.txt").write_text("DRAMP = 3 2 4\n")
    res = invoke(runner, "gen-ptrace", "--report", tmp_path / "bad.txt", "--flp0", tmp_path / "nope",
                 "--flp2", tmp_path / "nope", "--out", tmp_path / "p")
    assert res.exit_code == 1
    err = json.loads(res.stderr.strip().splitlines()[-1])
    assert err["stage"] == "gen-ptrace" and err["error"] == "FileNotFoundError"


def test_pipeline_missing_mapping(runner, tmp_path):
    (tmp_path / "cfg.txt").write_text("mapping = nowhere.map\ngrid = 8\n")
    res = invoke(runner, "pipeline", "--kernel", "matmul_linear", "--size", 100,
                 "--config", tmp_path / "cfg.txt", "--out", tmp_path / "out")
    assert res.exit_code != 0
    err = json.loads(res.stderr.strip().splitlines()[-1])
    assert err["error"] == "MappingNotFound" and err["stage"] == "gen-ptrace"


def test_pipeline_bundle(runner, tmp_path):
    out = tmp_path / "d"
    res = invoke(runner, "pipeline", "--kernel", "needleman_wunsch", "--size", 250, "--out", out)
    assert res.exit_code == 0, res.output
    names = {p.name for p in out.iterdir()}
    assert {"layer0.flp", "layer2.flp", "stack.lcf", "power.ptrace", "units.csv",
            "run_manifest.json"} <= names
    assert {f"layer{i}.ppm" for i in range(4)} <= names
    assert len(parse_ptrace((out / "power.ptrace").read_text()).rows) == 5
    manifest = json.loads((out / "run_manifest.json").read_text())
    assert manifest["scenario"] == {"kernel": "needleman_wunsch", "size": 250, "reduced_l2": False}
    assert set(manifest["outputs"]) == names - {"run_manifest.json"}


def test_pipeline_with_config_and_report(runner, tmp_path):
    (tmp_path / "rep.txt").write_text("L2CP = 1 2 3\nDRAMP = 0.5 1 1.5\n")
    (tmp_path / "cfg.txt").write_text(
        "# small run\ngrid = 12\ntransient = yes\ndt = 0.005\ntmin = 318\ntmax = 330\npx = 2\n"
        "report = rep.txt\ntim_thickness = 3e-5\n")
    out = tmp_path / "d"
    res = invoke(runner, "pipeline", "--kernel", "matmul_linear", "--size", 100,
                 "--config", tmp_path / "cfg.txt", "--out", out)
    assert res.exit_code == 0, res.output
    assert read_ppm(out / "layer2.ppm").width_px == 24
    assert len(list(out.glob("transient_step*.txt"))) == 5
    manifest = json.loads((out / "run_manifest.json").read_text())
    assert manifest["inputs"]["report"] == str(tmp_path / "rep.txt")
    assert manifest["parameters"]["tim_thickness"] == 3e-5


@pytest.mark.parametrize("cfg", ["bogus_key = 1\n", "grid = x\n", "tmin = 300\n", "grid\n"])
def test_pipeline_bad_config(runner, tmp_path, cfg):
    (tmp_path / "cfg.txt").write_text(cfg)
    res = invoke(runner, "pipeline", "--kernel", "matmul_linear", "--size", 10,
                 "--config", tmp_path / "cfg.txt", "--out", tmp_path / "o")
    assert res.exit_code == 1
    assert json.loads(res.stderr.strip().splitlines()[-1])["error"] == "ConfigError"
