import json
import math

import numpy as np
import pytest

from loopsmith import (
    ConfigError,
    FLCurrentController,
    OpenLoopController,
    PolePlaceCurrentController,
    PolePlaceVoltageController,
    ProjectConfig,
    SimTrace,
    apply_overrides,
    build_controller,
    config_hash,
    default_project_config,
    load_config,
    save_config,
)
from loopsmith.cli import main
from loopsmith.config import CONTROLLER_KINDS


def test_default_config_round_trip():
    cfg = default_project_config()
    assert ProjectConfig.from_dict(cfg.to_dict()) == cfg


def test_config_file_round_trip(tmp_path):
    cfg = default_project_config()
    path = tmp_path / "cfg.json"
    save_config(cfg, path)
    assert load_config(path) == cfg


def test_load_config_missing_file_raises(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.json")


def test_load_config_bad_json_raises(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(path)


def test_config_rejects_unknown_section(tmp_path):
    cfg = default_project_config()
    d = cfg.to_dict()
    d["extra"] = {}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(d))
    with pytest.raises(ConfigError):
        load_config(path)


def test_apply_overrides_parses_json_values():
    cfg = default_project_config()
    out = apply_overrides(
        cfg,
        [
            "control.f_n_hz=750",
            "sim.adc_bits=null",
            'control.controller="pole_place_voltage"',
            "actuator.eddy_branches=[[100.0, 1e-5]]",
        ],
    )
    assert out.control.f_n_hz == 750.0
    assert out.sim.adc_bits is None
    assert out.control.controller == "pole_place_voltage"
    assert out.actuator.eddy_branches == ((100.0, 1e-5),)


def test_apply_overrides_accepts_bare_strings():
    out = apply_overrides(default_project_config(), ["control.controller=fl_current"])
    assert out.control.controller == "fl_current"


def test_apply_overrides_unknown_key_raises():
    with pytest.raises(ConfigError):
        apply_overrides(default_project_config(), ["sim.warp_factor=9"])


def test_apply_overrides_requires_equals_sign():
    with pytest.raises(ConfigError):
        apply_overrides(default_project_config(), ["sim.duration"])


def test_config_hash_is_stable_and_sensitive():
    a = default_project_config()
    b = apply_overrides(a, ["control.f_n_hz=501"])
    assert config_hash(a) == config_hash(default_project_config())
    assert config_hash(a) != config_hash(b)
    assert len(config_hash(a)) == 12


def test_build_controller_dispatch():
    kinds = {
        "pole_place_voltage": PolePlaceVoltageController,
        "pole_place_current": PolePlaceCurrentController,
        "fl_current": FLCurrentController,
        "open_loop_voltage": OpenLoopController,
        "open_loop_current": OpenLoopController,
    }
    assert set(kinds) == set(CONTROLLER_KINDS)
    for kind, cls in kinds.items():
        cfg = apply_overrides(default_project_config(), [f"control.controller={kind}"])
        assert isinstance(build_controller(cfg), cls)


def test_unknown_controller_kind_raises():
    with pytest.raises(ConfigError):
        apply_overrides(default_project_config(), ["control.controller=maglev"])


# CLI


def run_cli(*argv) -> int:
    return main(list(argv))


def test_cli_design_json(tmp_path):
    out = tmp_path / "d"
    assert run_cli("design", "--out", str(out), "--format", "json") == 0
    payload = json.loads((out / "design.json").read_text())
    assert payload["r_ld"] == pytest.approx(1111.111111111111)
    assert payload["c_lg"] == pytest.approx(1.0336343480495039e-10)
    assert payload["phase_margin_deg"] == pytest.approx(72.33520727520249, abs=1e-6)
    assert "config_hash" in payload


def test_cli_design_csv(tmp_path):
    out = tmp_path / "d"
    assert run_cli("design", "--out", str(out), "--format", "csv") == 0
    lines = (out / "design.csv").read_text().splitlines()
    assert lines[0].startswith("# config ")
    assert lines[1] == "key,value"
    keys = {ln.split(",")[0] for ln in lines[2:]}
    assert {"r_ld", "c_ld", "c_lg", "phi_max_deg"} <= keys


def test_cli_design_svg(tmp_path):
    out = tmp_path / "d"
    assert run_cli("design", "--out", str(out), "--format", "svg") == 0
    body = (out / "design.svg").read_text()
    assert body.lstrip().startswith("<?xml")


def test_cli_gangs_csv_per_gang(tmp_path):
    out = tmp_path / "g"
    assert run_cli("gangs", "--out", str(out), "--format", "csv") == 0
    names = {p.name for p in out.iterdir()}
    assert names == {
        "gang_reference_to_output.csv",
        "gang_reference_to_drive.csv",
        "gang_disturbance_to_output.csv",
        "gang_sensitivity.csv",
        "gang_noise_to_drive.csv",
        "gang_complementary.csv",
    }


def test_cli_gangs_json_summary(tmp_path):
    out = tmp_path / "g"
    assert run_cli("gangs", "--out", str(out), "--format", "json") == 0
    payload = json.loads((out / "gangs.json").read_text())
    assert payload["dc_gain_db"]["reference_to_output"] == pytest.approx(
        5.848596478041273, abs=1e-9
    )
    assert payload["dc_gain_db"]["disturbance_to_output"] is None


def test_cli_margins_nonideal(tmp_path):
    out = tmp_path / "m"
    assert (
        run_cli("margins", "--fidelity", "nonideal", "--out", str(out), "--format", "json")
        == 0
    )
    payload = json.loads((out / "margins.json").read_text())
    assert payload["phase_margin_deg"] == pytest.approx(62.51960633513069, abs=1e-3)
    assert payload["gain_margin_db"] == pytest.approx(25.31507327189309, abs=1e-3)


def test_cli_bode_csv_grid(tmp_path):
    out = tmp_path / "b"
    assert (
        run_cli(
            "bode", "--fmin", "100", "--fmax", "1000", "--points", "11",
            "--out", str(out), "--format", "csv",
        )
        == 0
    )
    lines = (out / "bode.csv").read_text().splitlines()
    assert lines[1] == "freq_hz,real,imag,mag_db,phase_deg"
    rows = [ln.split(",") for ln in lines[2:]]
    assert len(rows) == 11
    assert float(rows[0][0]) == pytest.approx(100.0)
    assert float(rows[-1][0]) == pytest.approx(1000.0)


def test_cli_poleplace_voltage_json(tmp_path):
    out = tmp_path / "pp"
    assert run_cli("poleplace", "--drive", "voltage", "--out", str(out), "--format", "json") == 0
    payload = json.loads((out / "poleplace.json").read_text())
    assert payload["k"] == pytest.approx([5.3636, 0.0031, 0.3437], rel=1e-3)
    assert payload["g"] == pytest.approx(6.866490503833926)
    eig = payload["compensator_eigenvalues"]
    assert sorted(e["real"] for e in eig)[0] == pytest.approx(-42087.907538413376)


def test_cli_poleplace_current_json(tmp_path):
    out = tmp_path / "pp"
    assert run_cli("poleplace", "--drive", "current", "--out", str(out), "--format", "json") == 0
    payload = json.loads((out / "poleplace.json").read_text())
    assert payload["k"] == pytest.approx([7.124, 0.0037399291366715507], rel=1e-6)
    assert payload["observer"]["l"] == pytest.approx(31118.0)
    assert payload["observer"]["max_fe_step"] == pytest.approx(2.0 / 31415.92653589793)


def test_cli_simulate_trace(tmp_path):
    out = tmp_path / "s"
    assert (
        run_cli("simulate", "--set", "sim.duration=0.004", "--out", str(out), "--format", "csv")
        == 0
    )
    tr = SimTrace.from_csv(out / "trace.csv")
    assert len(tr.t) == int(0.004 * 160e3)
    assert abs(tr.theta[-1] - math.radians(10.0)) / math.radians(10.0) < 0.01


def test_cli_simulate_json_summary(tmp_path):
    out = tmp_path / "s"
    assert (
        run_cli("simulate", "--set", "sim.duration=0.02", "--out", str(out), "--format", "json")
        == 0
    )
    payload = json.loads((out / "trace.json").read_text())
    assert payload["summary"]["steady_state_error_pct"] < 0.5
    assert payload["summary"]["peak_current_a"] < 9.8
    assert len(payload["theta"]) == payload["summary"]["samples"]


def test_cli_sweep_csv(tmp_path):
    out = tmp_path / "sw"
    assert (
        run_cli(
            "sweep", "--fmin", "200", "--fmax", "800", "--points", "2",
            "--cycles", "3", "--settle-cycles", "3", "--out", str(out), "--format", "csv",
        )
        == 0
    )
    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines[1] == "freq_hz,real,imag,mag_db,phase_deg"
    assert len(lines) == 4


def test_cli_config_file_and_set_precedence(tmp_path):
    cfg = default_project_config()
    cfg_path = tmp_path / "own.json"
    save_config(apply_overrides(cfg, ["sim.duration=0.002"]), cfg_path)
    out = tmp_path / "o"
    code = run_cli(
        "simulate", "--config", str(cfg_path), "--set", "sim.duration=0.003",
        "--out", str(out), "--format", "csv",
    )
    assert code == 0
    tr = SimTrace.from_csv(out / "trace.csv")
    assert len(tr.t) == int(0.003 * 160e3)


def test_cli_exit_code_config_error(tmp_path, capsys):
    code = run_cli("simulate", "--set", "control.controller=warp", "--out", str(tmp_path / "x"))
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_cli_exit_code_numeric_error(tmp_path, capsys):
    code = run_cli("margins", "--set", "drive.c_lg=1.0", "--out", str(tmp_path / "x"))
    assert code == 3
    assert "error:" in capsys.readouterr().err


def test_cli_svg_outputs_are_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_cli("bode", "--out", str(a), "--format", "svg") == 0
    assert run_cli("bode", "--out", str(b), "--format", "svg") == 0
    assert (a / "bode.svg").read_bytes() == (b / "bode.svg").read_bytes()


def test_cli_report_manifest(tmp_path):
    out = tmp_path / "rep"
    assert run_cli("report", "--set", "sim.duration=0.004", "--out", str(out)) == 0
    names = {p.name for p in out.iterdir()}
    expected = {
        "report.json",
        "report.csv",
        "bode.csv",
        "bode.svg",
        "gangs.svg",
        "injection.svg",
        "trace_fl_current.csv",
        "trace_fl_current.svg",
        "trace_pole_place_current.csv",
        "trace_pole_place_current.svg",
        "trace_pole_place_voltage.csv",
        "trace_pole_place_voltage.svg",
    }
    assert expected <= names
    payload = json.loads((out / "report.json").read_text())
    assert payload["loop"]["phase_margin_deg"] == pytest.approx(72.33520727520249, abs=1e-6)
    assert payload["poleplace"]["current"]["g"] == pytest.approx(7.806, rel=1e-4)
    assert payload["fl_margins"]["phase_margin_deg"] == pytest.approx(59.5717346179608, abs=1e-4)


def test_cli_rejects_unknown_format(capsys):
    with pytest.raises(SystemExit):
        run_cli("bode", "--format", "pdf")
