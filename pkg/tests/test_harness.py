"""Scenario orchestration, sweeps, report emission, and the CLI."""

import json
import subprocess
import sys

import pytest

from statorguard.cli import main as cli_main
from statorguard.harness import (
    ConfigError,
    ReliabilityReport,
    SweepGrid,
    default_calibration_points,
    default_security_catalog,
    emit_report,
    load_config,
    run_scenario,
    sweep_security,
    sweep_sensitivity,
    thread_budget,
)

# Commissioning the fixed scheme from scratch costs eleven healthy runs;
# unit tests pin the calibration instead and leave commissioning to its
# own test.
CAL = {"ratio": 1.233, "beta_ng": 0.155}


def _fault_config(**overrides):
    cfg = {
        "kind": "64g2",
        "seed": 11,
        "fault": {"x": 0.0, "rf": 50.0, "t_on": 0.3},
        "profile": {"duration": 0.9},
        "calibration": dict(CAL),
    }
    cfg.update(overrides)
    return cfg


# ------------------------------------------------------------ config layer

def test_load_config_round_trip(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"kind": "64g2", "seed": 3}))
    assert load_config(path) == {"kind": "64g2", "seed": 3}


def test_load_config_rejects_bad_json(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(path)


def test_load_config_rejects_non_object(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_config(path)


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.json")


def test_bad_kind_rejected():
    with pytest.raises(ConfigError):
        run_scenario({"kind": "64x"})


def test_kind_section_mismatch_rejected():
    with pytest.raises(ConfigError):
        run_scenario({"kind": "64g2", "sub64s": {}})
    with pytest.raises(ConfigError):
        run_scenario({"kind": "64s", "machine": {}})


def test_unknown_machine_key_rejected():
    with pytest.raises(ConfigError):
        run_scenario(_fault_config(machine={"frequency": 60.0}))


def test_bad_disturbance_rejected():
    cfg = _fault_config(fault=None)
    cfg.pop("fault")
    cfg["disturbances"] = [{"kind": "lightning", "t_on": 0.1}]
    with pytest.raises(ConfigError):
        run_scenario(cfg)


def test_unknown_kaf_key_rejected():
    with pytest.raises(ConfigError):
        run_scenario(_fault_config(kaf={"gain": 2.0}))


def test_unknown_scheme_rejected():
    with pytest.raises(ConfigError):
        run_scenario(_fault_config(schemes=["adaptive", "magic"]))


def test_64s_rejects_disturbances():
    cfg = {"kind": "64s", "disturbances": [{"kind": "load_step", "t_on": 0.1}]}
    with pytest.raises(ConfigError):
        run_scenario(cfg)


def test_unknown_estimator_key_rejected():
    cfg = {"kind": "64s", "estimator": {"speed": 2.0}}
    with pytest.raises(ConfigError):
        run_scenario(cfg)


def test_thread_budget_env(monkeypatch):
    monkeypatch.setenv("STATORGUARD_THREADS", "3")
    assert thread_budget() == 3
    monkeypatch.setenv("STATORGUARD_THREADS", "zero")
    with pytest.raises(ConfigError):
        thread_budget()
    monkeypatch.setenv("STATORGUARD_THREADS", "0")
    with pytest.raises(ConfigError):
        thread_budget()
    monkeypatch.delenv("STATORGUARD_THREADS")
    assert thread_budget() >= 1


def test_default_calibration_points_cover_load_and_pf():
    points = default_calibration_points()
    assert len(points) == 11
    assert all(0.0 <= load <= 1.0 for load, _ in points)
    assert {pf for _, pf in points} == {1.0, 0.85, -0.85}


# ---------------------------------------------------------- scenario runs

def test_fault_scenario_trips_both_schemes():
    result = run_scenario(_fault_config(), name="hard_fault")
    assert set(result.verdicts) == {"a64g2", "ng64g2"}
    for verdict in result.verdicts.values():
        assert verdict["tripped"]
        assert verdict["detected"]
        assert verdict["first_trip_index"] >= 300
        assert verdict["latency_samples"] <= 500
    assert result.to_dict()["kind"] == "64g2"
    assert "traces" not in result.to_dict()


def test_healthy_scenario_reports_misoperation_flag():
    cfg = _fault_config()
    cfg.pop("fault")
    result = run_scenario(cfg)
    for verdict in result.verdicts.values():
        assert not verdict["tripped"]
        assert not verdict["misoperation"]
        assert verdict["margin"] < 1.0


def test_scenario_deterministic():
    a = run_scenario(_fault_config())
    b = run_scenario(_fault_config())
    assert a.verdicts == b.verdicts


def test_seed_changes_noise_draws():
    a = run_scenario(_fault_config(seed=1))
    b = run_scenario(_fault_config(seed=2))
    assert a.verdicts["a64g2"]["margin"] != b.verdicts["a64g2"]["margin"]


def test_scheme_selection_limits_verdicts():
    result = run_scenario(_fault_config(schemes=["adaptive"]))
    assert set(result.verdicts) == {"a64g2"}


# ----------------------------------------------------------------- sweeps

def _small_grid():
    return SweepGrid(taps=(0.0, 0.5, 1.0), rfs=(50.0,), loads=(1.0,), pfs=(1.0,))


def test_sweep_grid_validation():
    with pytest.raises(ConfigError):
        SweepGrid(taps=())
    with pytest.raises(ConfigError):
        SweepGrid(taps=(0.0, 1.5))
    with pytest.raises(ConfigError):
        SweepGrid(rfs=(-1.0,))


def test_sensitivity_sweep_structure_and_dominance():
    report = sweep_sensitivity(_small_grid(), {"seed": 5, "calibration": dict(CAL)})
    assert report.study == "sensitivity"
    assert len(report.cells) == 3
    assert [c["x"] for c in report.cells] == [0.0, 0.5, 1.0]
    for cell in report.cells:
        # the adaptive scheme sees everything the fixed scheme sees
        assert cell["detected_adaptive"] or not cell["detected_fixed"]
    assert report.meta["min_rf"] == 50.0
    for lo, hi in report.blind_zone:
        assert 0.0 <= lo <= hi <= 1.0


def test_sensitivity_sweep_digest_stable_across_thread_budgets(monkeypatch):
    base = {"seed": 5, "calibration": dict(CAL)}
    monkeypatch.setenv("STATORGUARD_THREADS", "1")
    serial = sweep_sensitivity(_small_grid(), base)
    monkeypatch.setenv("STATORGUARD_THREADS", "4")
    threaded = sweep_sensitivity(_small_grid(), base)
    assert serial.digest() == threaded.digest()
    assert serial.to_dict() == threaded.to_dict()


def test_sensitivity_sweep_rejects_64s_config():
    with pytest.raises(ConfigError):
        sweep_sensitivity(None, {"kind": "64s"})


def test_security_sweep_rejects_fault_scenarios():
    catalog = [{"name": "bad", "kind": "64g2",
                "fault": {"x": 0.0, "rf": 50.0, "t_on": 0.1}}]
    with pytest.raises(ConfigError):
        sweep_security(catalog, {"calibration": dict(CAL)})


def test_security_sweep_small_catalog_quiet():
    catalog = [{
        "name": "load_step", "kind": "64g2",
        "disturbances": [{"kind": "load_step", "magnitude": 0.75, "t_on": 0.5}],
        "profile": {"load_pu": 1.0, "duration": 1.2},
    }]
    report = sweep_security(catalog, {"seed": 4, "calibration": dict(CAL)})
    assert report.study == "security"
    assert {row["scheme"] for row in report.cells} == {"a64g2", "ng64g2"}
    assert report.misoperations == []
    assert report.meta["scenario_count"] == 1


def test_default_security_catalog_is_fault_free():
    catalog = default_security_catalog()
    assert len(catalog) >= 10
    assert all("fault" not in entry for entry in catalog)
    kinds = {entry["kind"] for entry in catalog}
    assert kinds == {"64g2", "64s"}


# --------------------------------------------------------------- emission

def test_emit_report_json_round_trip(tmp_path):
    report = ReliabilityReport(
        study="sensitivity",
        cells=[{"x": 0.0, "detected_adaptive": True}],
        blind_zone=[[0.5, 0.5]],
        calibration={"ratio": 1.2, "beta_ng": 0.1},
        meta={"seed": 0},
    )
    written = emit_report(report, tmp_path / "out", fmt="json")
    assert written == [str(tmp_path / "out" / "report.json")]
    payload = json.loads((tmp_path / "out" / "report.json").read_text())
    assert payload["digest"] == report.digest()
    assert payload["blind_zone"] == [[0.5, 0.5]]


def test_emit_report_identical_bytes(tmp_path):
    report = ReliabilityReport(study="security", cells=[{"a": 1.5}], meta={})
    emit_report(report, tmp_path / "one")
    emit_report(report, tmp_path / "two")
    assert (tmp_path / "one" / "report.json").read_bytes() == \
        (tmp_path / "two" / "report.json").read_bytes()


def test_emit_report_csv_adds_tables(tmp_path):
    report = ReliabilityReport(
        study="sensitivity",
        cells=[{"x": 0.0, "rf": 50.0, "detected_adaptive": True,
                "latency_adaptive_samples": None}],
        misoperations=[],
    )
    written = emit_report(report, tmp_path, fmt="csv")
    names = {p.rsplit("/", 1)[-1] for p in written}
    assert names == {"report.json", "cells.csv", "misoperations.csv"}
    lines = (tmp_path / "cells.csv").read_text().strip().splitlines()
    assert lines[0] == "detected_adaptive,latency_adaptive_samples,rf,x"
    assert lines[1] == "1,,50.0,0.0"


def test_emit_scenario_result_traces(tmp_path):
    result = run_scenario(_fault_config(), name="emitted")
    written = emit_report(result, tmp_path, fmt="csv")
    names = {p.rsplit("/", 1)[-1] for p in written}
    assert names == {"report.json", "trace_a64g2.csv", "trace_ng64g2.csv",
                     "long.csv"}
    long_lines = (tmp_path / "long.csv").read_text().strip().splitlines()
    assert long_lines[0] == "trace,signal,t,value"
    assert any(line.startswith("a64g2,JAO,") for line in long_lines[1:])


def test_emit_report_validation(tmp_path):
    with pytest.raises(ConfigError):
        emit_report(ReliabilityReport(study="x"), tmp_path, fmt="yaml")
    with pytest.raises(ConfigError):
        emit_report({"random": "dict"}, tmp_path)


# -------------------------------------------------------------------- CLI

@pytest.fixture(scope="module")
def cli_workspace(tmp_path_factory):
    """One simulated 64g2 fault scenario shared by the CLI tests."""
    root = tmp_path_factory.mktemp("cli")
    config = root / "scenario.json"
    config.write_text(json.dumps(_fault_config()))
    sim_dir = root / "sim"
    code = cli_main(["simulate", "--config", str(config), "--out", str(sim_dir)])
    assert code == 0
    return {"root": root, "config": config,
            "waveforms": sim_dir / "waveforms.csv"}


def test_cli_simulate_writes_waveforms(cli_workspace):
    text = cli_workspace["waveforms"].read_text()
    assert text.splitlines()[0] == "t,vp3,vn3"


def test_cli_detect_matches_ingested_waveforms(cli_workspace, tmp_path, capsys):
    code = cli_main(["detect-64g2", "--config", str(cli_workspace["config"]),
                     "--out", str(tmp_path / "direct")])
    assert code == 0
    direct = json.loads(capsys.readouterr().out)
    code = cli_main(["detect-64g2", "--config", str(cli_workspace["config"]),
                     "--input", str(cli_workspace["waveforms"]),
                     "--out", str(tmp_path / "replay")])
    assert code == 0
    replay = json.loads(capsys.readouterr().out)
    for scheme in ("a64g2", "ng64g2"):
        assert (replay["report"]["verdicts"][scheme]["first_trip_index"]
                == direct["report"]["verdicts"][scheme]["first_trip_index"])
    assert (tmp_path / "replay" / "trace_a64g2.csv").exists()


def test_cli_detect_single_scheme_flag(cli_workspace, tmp_path, capsys):
    code = cli_main(["detect-64g2", "--config", str(cli_workspace["config"]),
                     "--adaptive", "--out", str(tmp_path)])
    assert code == 0
    out = json.loads(capsys.readouterr().out)
    assert list(out["report"]["verdicts"]) == ["a64g2"]


def test_cli_locate_prints_position(tmp_path, capsys):
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({
        "kind": "64s", "seed": 2, "noise": 0.0,
        "fault": {"x": 0.25, "rf": 90.0, "t_on": 1.6},
        "profile": {"duration": 2.5, "speed": 1.0},
    }))
    code = cli_main(["locate", "--config", str(config)])
    assert code == 0
    out = json.loads(capsys.readouterr().out)
    assert out["tripped"]
    assert out["x_hat"] == pytest.approx(0.25, abs=0.05)


def test_cli_report_reemits(cli_workspace, tmp_path, capsys):
    report = ReliabilityReport(study="security", cells=[], meta={"seed": 0})
    emit_report(report, tmp_path / "orig")
    code = cli_main(["report", "--input", str(tmp_path / "orig" / "report.json"),
                     "--out", str(tmp_path / "again")])
    assert code == 0
    out = json.loads(capsys.readouterr().out)
    assert out["report"]["digest"] == report.digest()
    again = json.loads((tmp_path / "again" / "report.json").read_text())
    assert again["digest"] == report.digest()


def test_cli_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"kind": "64x"}))
    assert cli_main(["simulate", "--config", str(bad)]) == 1
    capsys.readouterr()


def test_cli_rejects_unknown_top_level_key(tmp_path, capsys):
    # a typoed section must fail loudly, not fall back to defaults
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"seed": 0, "sweep": {"rfs": [50.0]}}))
    assert cli_main(["sweep-sensitivity", "--config", str(bad)]) == 1
    err = capsys.readouterr().err
    assert "sweep" in err and "recognized" in err


def test_cli_usage_error_exit_code(capsys):
    assert cli_main(["detect-64g2"]) == 1
    capsys.readouterr()


def test_cli_runtime_error_exit_code(cli_workspace, capsys):
    code = cli_main(["detect-64g2", "--config", str(cli_workspace["config"]),
                     "--input", "/nonexistent/waves.csv"])
    assert code == 2
    capsys.readouterr()


def test_cli_entry_point_subprocess(cli_workspace, tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "statorguard.cli", "calibrate",
         "--config", str(cli_workspace["config"]),
         "--out", str(tmp_path)],
        capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0, proc.stderr
    payload = json.loads(proc.stdout)
    assert payload["ratio"] > 0
    assert len(payload["points"]) == 11
    stored = json.loads((tmp_path / "calibration.json").read_text())
    assert stored["ratio"] == payload["ratio"]
