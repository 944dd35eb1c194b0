import json
import os

import pytest
import yaml

from tiltrotor.cli import EXIT_CONFIG, EXIT_OK, main
from tiltrotor.config import apply_override, default_config_text, load_config, parse_config
from tiltrotor.errors import ConfigError
from tiltrotor.sim.log import COLUMNS, SimulationLog
from tiltrotor.vehicle import VehicleParams


def default_tree():
    return yaml.safe_load(default_config_text())


def write_config(tmp_path, tree):
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(tree))
    return str(path)


def test_default_config_is_valid(config):
    assert config.params().m == 2.1
    assert config.params().I_b.shape == (3, 3)
    for name in ("hover_offset", "yaw90_hover", "square_xy", "pitch_sweep", "perch_push"):
        assert config.scenario(name).name == name
        assert config.thresholds(name)


def test_default_vehicle_matches_library_defaults(config):
    lib = VehicleParams()
    cfg = config.params()
    assert (cfg.m, cfg.L_h, cfg.L_v, cfg.k_f, cfg.F_max) == (lib.m, lib.L_h, lib.L_v, lib.k_f, lib.F_max)


def test_negative_mass_reports_field():
    with pytest.raises(ConfigError, match=r"vehicle\.mass: .*greater than 0"):
        load_config(overrides=["vehicle.mass=-1"])


def test_missing_field_reports_path():
    tree = default_tree()
    del tree["vehicle"]["k_f"]
    with pytest.raises(ConfigError, match=r"vehicle\.k_f: Field required"):
        parse_config(tree)


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match=r"vehicle\.colour"):
        load_config(overrides=["vehicle.colour=red"])


def test_bad_inertia_and_ratio_rejected():
    with pytest.raises(ConfigError, match="vehicle.inertia"):
        load_config(overrides=["vehicle.inertia=[[1,0,0],[0,-1,0],[0,0,1]]"])
    with pytest.raises(ConfigError, match="simulation"):
        load_config(overrides=["simulation.control_dt=0.0005", "simulation.plant_dt=0.0002"])


def test_override_parses_yaml_values():
    cfg = load_config(overrides=["scenarios.square_xy.side=2.5",
                                 "controller.gains.fully_actuated.K_i=[1,1,1,1,1]"])
    assert cfg.scenarios.square_xy.side == 2.5
    assert cfg.gains().K_fi[4, 4] == 1.0
    with pytest.raises(ConfigError):
        apply_override({}, "no_equals_sign")


def test_cli_validate_default(capsys):
    assert main(["validate"]) == EXIT_OK
    assert "config OK" in capsys.readouterr().out


def test_cli_validate_negative_mass(tmp_path, capsys):
    tree = default_tree()
    tree["vehicle"]["mass"] = -2.1
    assert main(["validate", "--config", write_config(tmp_path, tree)]) == EXIT_CONFIG
    assert "vehicle.mass" in capsys.readouterr().err


def test_cli_names_violating_gains(capsys):
    code = main(["validate", "--override", "controller.gains.underactuated.K_i=100"])
    assert code == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "controller.gains" in err and "axis p~2" in err


def test_cli_run_rejects_bad_config_before_simulating(tmp_path):
    code = main(["run", "--scenario", "square_xy", "--out", str(tmp_path),
                 "--override", "vehicle.mass=-1"])
    assert code == EXIT_CONFIG
    assert not os.listdir(tmp_path)


@pytest.mark.slow
def test_cli_run_square(tmp_path, capsys):
    assert main(["run", "--scenario", "square_xy", "--out", str(tmp_path)]) == EXIT_OK
    out = tmp_path / "square_xy"
    log = SimulationLog.from_csv(str(out / "log.csv"))
    assert len(log) > 0
    with open(out / "log.csv") as fh:
        assert fh.readline().strip().split(",") == list(COLUMNS)
    summary = json.loads((out / "summary.json").read_text())
    assert summary["passed"] is True
    assert summary["metrics"]["saturation_count"] == 0
    assert not (out / "certificate.txt").exists()
    assert "square_xy: PASS" in capsys.readouterr().out


@pytest.mark.slow
def test_cli_run_pitch_with_certificate(tmp_path):
    code = main(["run", "--scenario", "pitch_sweep", "--check-stability", "--out", str(tmp_path)])
    assert code == EXIT_OK
    out = tmp_path / "pitch_sweep"
    assert (out / "certificate.txt").read_text().startswith("Cascade convergence certificate")
    record = json.loads((out / "certificate.json").read_text())
    assert {"passed", "decay_rate", "slowest_pole_rate", "monotone_envelope"} <= set(record)


@pytest.mark.slow
def test_cli_threshold_failure_exit_code(tmp_path):
    code = main(["run", "--scenario", "hover_offset", "--out", str(tmp_path),
                 "--override", "scenarios.hover_offset.duration=1.0"])
    assert code == 1
    summary = json.loads((tmp_path / "hover_offset" / "summary.json").read_text())
    assert summary["passed"] is False


@pytest.mark.slow
def test_cli_abort_exit_code(tmp_path):
    code = main(["run", "--scenario", "pitch_sweep", "--out", str(tmp_path),
                 "--override", "scenarios.pitch_sweep.amplitude_deg=70",
                 "--override", "controller.margin=0.4"])
    assert code == 3
    summary = json.loads((tmp_path / "pitch_sweep" / "summary.json").read_text())
    assert "aborted" in summary


@pytest.mark.slow
def test_cli_parallel_matches_serial(tmp_path):
    short = ["--override", "scenarios.hover_offset.duration=1.0",
             "--override", "scenarios.yaw90_hover.duration=1.0"]
    names = ["--scenario", "hover_offset", "--scenario", "yaw90_hover"]
    main(["run", *names, *short, "--out", str(tmp_path / "serial")])
    main(["run", *names, *short, "--parallel", "2", "--out", str(tmp_path / "parallel")])
    for name in ("hover_offset", "yaw90_hover"):
        serial = (tmp_path / "serial" / name / "log.csv").read_bytes()
        assert serial == (tmp_path / "parallel" / name / "log.csv").read_bytes()
