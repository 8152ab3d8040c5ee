"""Scenario orchestration, reliability studies, and report emission.

A scenario is a JSON-friendly dict (sections: kind, seed, machine or
sub64s, fault, disturbances, profile, noise, plus detector/estimator
tuning).  run_scenario executes the full pipeline for one scenario;
sweep_sensitivity and sweep_security run the grid and disturbance
studies behind the reliability claims; emit_report writes deterministic
JSON/CSV artifacts.
"""

from __future__ import annotations

import concurrent.futures
import copy
import hashlib
import json
import os
from dataclasses import dataclass, field, fields as dc_fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .a64g2 import (
    AdaptiveRatioDetector,
    Calibration64RAT,
    DetectorConfig,
    FixedRatioDetector,
    SchemeTrace,
    calibrate_64rat,
    write_trace_csv,
)
from .a64s import (
    A64SEstimator,
    A64SEstimatorConfig,
    A64STrace,
    InsulationDetectorConfig,
    write_a64s_trace_csv,
)
from .plantsim import (
    DisturbanceSpec,
    FaultSpec,
    HarmonicFrame,
    MachineConfig,
    Subharmonic64SConfig,
    constant_speed,
    ramp_speed,
    simulate_64g2_scenario,
    simulate_64s_timeseries,
    third_harmonic_solve,
)
from .signalcore import TimeSeries, extract_phasor

__all__ = [
    "ConfigError",
    "ScenarioResult",
    "SweepGrid",
    "ReliabilityReport",
    "load_config",
    "run_scenario",
    "calibrate_from_config",
    "default_calibration_points",
    "default_security_catalog",
    "sweep_sensitivity",
    "sweep_security",
    "emit_report",
    "thread_budget",
    "DETECTION_WINDOW_S",
    "DEFAULT_ONSET_SAMPLE",
]

# A fault counts as detected when the trip lands within this long of onset.
DETECTION_WINDOW_S = 0.5
DEFAULT_ONSET_SAMPLE = 270


class ConfigError(ValueError):
    """A scenario/sweep configuration is malformed or inconsistent."""


def load_config(path) -> Dict[str, Any]:
    """Read a JSON scenario config."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    return data


def _build(cls, data: Dict[str, Any], section: str):
    if not isinstance(data, dict):
        raise ConfigError(f"section {section!r} must be an object")
    kwargs = dict(data)
    for key, value in kwargs.items():
        if isinstance(value, list):
            kwargs[key] = tuple(value)
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"section {section!r}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"section {section!r}: {exc}") from exc


def _derive_seed(base_seed: int, *branch: int) -> int:
    return int(np.random.SeedSequence([int(base_seed), *[int(b) for b in branch]])
               .generate_state(1)[0])


def thread_budget() -> int:
    """Worker cap for sweeps; STATORGUARD_THREADS overrides the default."""
    raw = os.environ.get("STATORGUARD_THREADS")
    if raw is None:
        return max(1, min(8, os.cpu_count() or 1))
    try:
        value = int(raw)
    except ValueError as exc:
        raise ConfigError(f"STATORGUARD_THREADS must be an integer, got {raw!r}") from exc
    if value < 1:
        raise ConfigError("STATORGUARD_THREADS must be >= 1")
    return value


@dataclass
class ScenarioResult:
    """Outcome of one scenario: machine-readable verdicts plus the full
    per-sample traces keyed by scheme name."""

    kind: str
    name: str
    seed: int
    verdicts: Dict[str, Dict[str, Any]]
    traces: Dict[str, Any]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "name": self.name,
            "seed": self.seed,
            "verdicts": self.verdicts,
        }


@dataclass
class SweepGrid:
    """Axes of the sensitivity study."""

    taps: Tuple[float, ...] = (0.0, 0.03, 0.06, 0.09, 0.125, 0.25, 0.375,
                               0.5, 0.625, 0.75, 0.875, 1.0)
    rfs: Tuple[float, ...] = (50.0, 1000.0)
    loads: Tuple[float, ...] = (0.5, 1.0)
    pfs: Tuple[float, ...] = (1.0,)

    def __post_init__(self):
        self.taps = tuple(float(x) for x in self.taps)
        self.rfs = tuple(float(r) for r in self.rfs)
        self.loads = tuple(float(l) for l in self.loads)
        self.pfs = tuple(float(p) for p in self.pfs)
        if not (self.taps and self.rfs and self.loads and self.pfs):
            raise ConfigError("sweep grid axes must be non-empty")
        if any(not 0.0 <= x <= 1.0 for x in self.taps):
            raise ConfigError("grid taps must lie in [0, 1]")
        if any(r < 0 for r in self.rfs):
            raise ConfigError("grid fault resistances must be >= 0")

    def cells(self) -> List[Tuple[float, float, float, float]]:
        return [
            (x, rf, load, pf)
            for x in sorted(self.taps)
            for rf in sorted(self.rfs)
            for load in sorted(self.loads)
            for pf in sorted(self.pfs)
        ]


@dataclass
class ReliabilityReport:
    """Machine-readable outcome of a sweep study."""

    study: str
    cells: List[Dict[str, Any]] = field(default_factory=list)
    blind_zone: List[List[float]] = field(default_factory=list)
    misoperations: List[Dict[str, Any]] = field(default_factory=list)
    calibration: Optional[Dict[str, float]] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "study": self.study,
            "cells": self.cells,
            "blind_zone": self.blind_zone,
            "misoperations": self.misoperations,
            "calibration": self.calibration,
            "meta": self.meta,
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _machine_from(config: Dict[str, Any]) -> MachineConfig:
    return _build(MachineConfig, config.get("machine", {}), "machine")


def _circuit_from(config: Dict[str, Any]) -> Subharmonic64SConfig:
    return _build(Subharmonic64SConfig, config.get("sub64s", {}), "sub64s")


def _profile_from(config: Dict[str, Any]) -> Dict[str, Any]:
    profile = config.get("profile", {})
    if not isinstance(profile, dict):
        raise ConfigError("section 'profile' must be an object")
    return profile


def _noise_from(config: Dict[str, Any]) -> float:
    noise = config.get("noise", 0.05)
    if not isinstance(noise, (int, float)) or noise < 0:
        raise ConfigError("'noise' must be a number >= 0")
    return float(noise)


def _detector_cfg_from(config: Dict[str, Any]) -> DetectorConfig:
    return _build(DetectorConfig, config.get("detector", {}), "detector")


def _speed_profile_from(profile: Dict[str, Any]):
    spec = profile.get("speed")
    if spec is None:
        return None
    if isinstance(spec, (int, float)):
        return constant_speed(float(spec))
    if isinstance(spec, dict):
        try:
            return ramp_speed(float(spec["t_start"]), float(spec["t_end"]),
                              float(spec["start"]), float(spec["end"]))
        except KeyError as exc:
            raise ConfigError(f"speed ramp needs t_start/t_end/start/end: missing {exc}")
        except ValueError as exc:
            raise ConfigError(f"speed ramp: {exc}") from exc
    raise ConfigError("'profile.speed' must be null, a number, or a ramp object")


def _check_kind(config: Dict[str, Any]) -> str:
    kind = config.get("kind", "64g2")
    if kind not in ("64g2", "64s"):
        raise ConfigError(f"'kind' must be '64g2' or '64s', got {kind!r}")
    if kind == "64g2" and "sub64s" in config and "machine" not in config:
        raise ConfigError("64g2 scenario given only a sub64s section; wrong kind?")
    if kind == "64s" and "machine" in config and "sub64s" not in config:
        raise ConfigError("64s scenario given only a machine section; wrong kind?")
    return kind


def default_calibration_points() -> List[Tuple[float, float]]:
    """Operating points for commissioning the fixed-ratio scheme: a load
    ladder at unity power factor plus lagging/leading extremes."""
    points = [(load, 1.0) for load in (0.5, 0.625, 0.75, 0.875, 1.0)]
    for load in (0.5, 0.75, 1.0):
        points.append((load, 0.85))
        points.append((load, -0.85))
    return points


def calibrate_from_config(config: Dict[str, Any]) -> Tuple[Calibration64RAT, List[Dict[str, float]]]:
    """Commission the fixed-ratio scheme from healthy runs across the
    calibration operating points; returns the calibration and the
    per-point medians that produced it."""
    machine = _machine_from(config)
    noise = _noise_from(config)
    seed = int(config.get("seed", 0))
    cal_section = config.get("calibration", {}) or {}
    if not isinstance(cal_section, dict):
        raise ConfigError("section 'calibration' must be an object")
    guard = float(cal_section.get("guard", 0.15))
    points_spec = cal_section.get("points")
    if points_spec is None:
        op_points = default_calibration_points()
    else:
        try:
            op_points = [(float(p["load_pu"]), float(p["pf"])) for p in points_spec]
        except (TypeError, KeyError) as exc:
            raise ConfigError(f"calibration points need load_pu and pf: {exc}")
    profile = _profile_from(config)
    fs = float(profile.get("fs", 1000.0))
    duration = float(cal_section.get("duration", 0.35))

    measured: List[Tuple[float, float]] = []
    details: List[Dict[str, float]] = []
    for i, (load, pf) in enumerate(op_points):
        sim = simulate_64g2_scenario(
            machine, fault=None, disturbances=(), load_pu=load, pf=pf,
            duration=duration, fs=fs, noise_std=noise,
            seed=_derive_seed(seed, 7000, i),
        )
        vp = np.array([f.v_p3 for f in sim.frames if f.valid])
        vn = np.array([f.v_n3 for f in sim.frames if f.valid])
        if vp.size == 0:
            raise ConfigError(f"calibration point load={load}, pf={pf} produced no valid frames")
        point = (float(np.median(vp)), float(np.median(vn)))
        measured.append(point)
        details.append({"load_pu": load, "pf": pf, "v_p3": point[0], "v_n3": point[1]})
    calibration = calibrate_64rat(measured, guard=guard)
    return calibration, details


def _resolve_calibration(config: Dict[str, Any]) -> Calibration64RAT:
    section = config.get("calibration", {}) or {}
    if isinstance(section, dict) and "ratio" in section and "beta_ng" in section:
        return Calibration64RAT(ratio=float(section["ratio"]),
                                beta_ng=float(section["beta_ng"]))
    calibration, _ = calibrate_from_config(config)
    return calibration


def frames_from_64g2_waveforms(
    vp3_wave: TimeSeries,
    vn3_wave: TimeSeries,
    machine: MachineConfig,
    load_pu: float = 1.0,
    pf: float = 1.0,
    window_cycles: int = 3,
    supervision_frac: float = 0.1,
) -> List[HarmonicFrame]:
    """Turn measured terminal/neutral waveforms into detector frames,
    applying the same minimum-signal supervision as the simulator path."""
    if vp3_wave.fs != vn3_wave.fs or len(vp3_wave) != len(vn3_wave):
        raise ConfigError("terminal and neutral waveforms must share fs and length")
    ph_p = extract_phasor(vp3_wave, 3.0 * machine.f1, window_cycles)
    ph_n = extract_phasor(vn3_wave, 3.0 * machine.f1, window_cycles)
    _, vp3_rated = third_harmonic_solve(machine, None, load_pu, pf)
    floor = supervision_frac * abs(vp3_rated)
    frames = []
    for i in range(len(vp3_wave)):
        ok = bool(ph_p.valid[i]) and ph_p.magnitude[i] >= floor
        frames.append(HarmonicFrame(
            t_index=i, v_p3=float(ph_p.magnitude[i]), v_n3=float(ph_n.magnitude[i]),
            load_pu=load_pu, pf=pf, valid=ok,
        ))
    return frames


def _run_64g2(config: Dict[str, Any], name: str,
              input_channels: Optional[Dict[str, TimeSeries]] = None) -> ScenarioResult:
    machine = _machine_from(config)
    fault_section = config.get("fault")
    fault = _build(FaultSpec, fault_section, "fault") if fault_section else None
    disturbances = [
        _build(DisturbanceSpec, d, f"disturbances[{i}]")
        for i, d in enumerate(config.get("disturbances", []))
    ]
    profile = _profile_from(config)
    load_pu = float(profile.get("load_pu", 1.0))
    pf = float(profile.get("pf", 1.0))
    duration = float(profile.get("duration", 1.0))
    fs = float(profile.get("fs", 1000.0))
    noise = _noise_from(config)
    seed = int(config.get("seed", 0))
    det_cfg = _detector_cfg_from(config)
    kaf = config.get("kaf", {})
    if not isinstance(kaf, dict):
        raise ConfigError("section 'kaf' must be an object")
    schemes = config.get("schemes", ["adaptive", "fixed"])
    if not set(schemes) <= {"adaptive", "fixed"}:
        raise ConfigError(f"unknown schemes in {schemes}")

    onset_index: Optional[int] = None
    if input_channels is not None:
        lower = {k.lower(): v for k, v in input_channels.items()}
        if "vp3" not in lower or "vn3" not in lower:
            raise ConfigError("input CSV must provide 'vp3' and 'vn3' channels")
        frames = frames_from_64g2_waveforms(
            lower["vp3"], lower["vn3"], machine, load_pu, pf,
            window_cycles=int(profile.get("window_cycles", 3)),
            supervision_frac=float(profile.get("supervision_frac", 0.1)),
        )
        fs = lower["vp3"].fs
        if fault is not None:
            onset_index = int(round(fault.t_on * fs))
    else:
        sim = simulate_64g2_scenario(
            machine, fault, disturbances, load_pu, pf, duration, fs, noise,
            window_cycles=int(profile.get("window_cycles", 3)),
            supervision_frac=float(profile.get("supervision_frac", 0.1)),
            seed=seed,
        )
        frames = sim.frames
        onset_index = sim.onset_index

    verdicts: Dict[str, Dict[str, Any]] = {}
    traces: Dict[str, Any] = {}
    if "adaptive" in schemes:
        detector = AdaptiveRatioDetector(cfg=det_cfg, **_kaf_kwargs(kaf))
        trace = detector.run(frames, fs, onset_index=onset_index)
        verdicts["a64g2"] = _verdict_64g2(trace, fault, fs)
        traces["a64g2"] = trace
    if "fixed" in schemes:
        calibration = _resolve_calibration(config)
        fixed = FixedRatioDetector.from_calibration(
            calibration, window=det_cfg.window, persistence=det_cfg.persistence)
        trace = fixed.run(frames, fs, onset_index=onset_index)
        verdict = _verdict_64g2(trace, fault, fs)
        verdict["calibration"] = {"ratio": calibration.ratio,
                                  "beta_ng": calibration.beta_ng}
        verdicts["ng64g2"] = verdict
        traces["ng64g2"] = trace
    return ScenarioResult(kind="64g2", name=name, seed=seed,
                          verdicts=verdicts, traces=traces)


def _kaf_kwargs(kaf: Dict[str, Any]) -> Dict[str, float]:
    allowed = {"process_noise", "measurement_noise", "initial_variance", "rho0"}
    unknown = set(kaf) - allowed
    if unknown:
        raise ConfigError(f"section 'kaf': unknown keys {sorted(unknown)}")
    return {k: float(v) for k, v in kaf.items() if v is not None}


def _verdict_64g2(trace: SchemeTrace, fault: Optional[FaultSpec], fs: float) -> Dict[str, Any]:
    first = trace.first_trip_index
    verdict: Dict[str, Any] = {
        "tripped": first is not None,
        "first_trip_index": first,
        "margin": trace.margin(),
    }
    if fault is not None and trace.onset_index is not None:
        latency = trace.detection_latency_samples
        verdict["latency_samples"] = latency
        verdict["detected"] = (
            first is not None
            and first >= trace.onset_index
            and latency <= DETECTION_WINDOW_S * fs
        )
    else:
        verdict["misoperation"] = first is not None
    return verdict


def _estimator_cfg_from(config: Dict[str, Any]) -> A64SEstimatorConfig:
    section = config.get("estimator", {}) or {}
    if not isinstance(section, dict):
        raise ConfigError("section 'estimator' must be an object")
    section = dict(section)
    detector = _build(InsulationDetectorConfig, section.pop("detector", {}),
                      "estimator.detector")
    allowed = {f.name for f in dc_fields(A64SEstimatorConfig)} - {"detector"}
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"section 'estimator': unknown keys {sorted(unknown)}")
    try:
        return A64SEstimatorConfig(detector=detector,
                                   **{k: float(v) for k, v in section.items()})
    except ValueError as exc:
        raise ConfigError(f"section 'estimator': {exc}") from exc


def _run_64s(config: Dict[str, Any], name: str,
             input_channels: Optional[Dict[str, TimeSeries]] = None) -> ScenarioResult:
    circuit = _circuit_from(config)
    fault_section = config.get("fault")
    fault = _build(FaultSpec, fault_section, "fault") if fault_section else None
    if config.get("disturbances"):
        raise ConfigError("64s scenarios model speed via profile.speed, not disturbances")
    profile = _profile_from(config)
    duration = float(profile.get("duration", 3.0))
    fs = float(profile.get("fs", 1000.0))
    noise = _noise_from(config)
    seed = int(config.get("seed", 0))
    est_cfg = _estimator_cfg_from(config)

    onset_index: Optional[int] = None
    if input_channels is not None:
        lower = {k.lower(): v for k, v in input_channels.items()}
        if "vn" not in lower or "in" not in lower:
            raise ConfigError("input CSV must provide 'vn' and 'in' channels")
        v_ts, i_ts = lower["vn"], lower["in"]
        fs = v_ts.fs
        if fault is not None:
            onset_index = int(round(fault.t_on * fs))
    else:
        events = [fault] if fault is not None else []
        v_ts, i_ts = simulate_64s_timeseries(
            circuit, events, duration=duration, fs=fs, noise_std=noise,
            speed_profile=_speed_profile_from(profile), seed=seed,
        )
        if fault is not None:
            onset_index = int(round(fault.t_on * fs))

    estimator = A64SEstimator(circuit, est_cfg)
    trace = estimator.run_timeseries(v_ts, i_ts, onset_index=onset_index)
    first = trace.first_trip_index
    verdict: Dict[str, Any] = {
        "tripped": first is not None,
        "first_trip_index": first,
        "baseline_ohms": trace.baseline,
    }
    try:
        rs_final, c0_final, tau0_final = trace.final_estimates()
        verdict["rs_final_ohms"] = rs_final
        verdict["c0_final_farads"] = c0_final
        verdict["tau0_final_s"] = tau0_final
    except ValueError:
        pass
    verdict["x_final"] = trace.final_location()
    if fault is not None and onset_index is not None:
        verdict["latency_samples"] = (first - onset_index) if first is not None else None
        verdict["detected"] = (
            first is not None and first >= onset_index
            and (first - onset_index) <= DETECTION_WINDOW_S * fs
        )
    else:
        verdict["misoperation"] = first is not None
    return ScenarioResult(kind="64s", name=name, seed=seed,
                          verdicts={"a64s": verdict}, traces={"a64s": trace})


def run_scenario(config: Dict[str, Any], name: str = "scenario",
                 input_channels: Optional[Dict[str, TimeSeries]] = None) -> ScenarioResult:
    """Execute one scenario end to end (simulate, or use ingested
    waveforms, then detect) and return verdicts plus traces."""
    if not isinstance(config, dict):
        raise ConfigError("config must be a dict")
    kind = _check_kind(config)
    if kind == "64g2":
        return _run_64g2(config, name, input_channels)
    return _run_64s(config, name, input_channels)


def sweep_sensitivity(grid: Optional[SweepGrid], base_config: Dict[str, Any]) -> ReliabilityReport:
    """Fault-coverage study: run every (tap, Rf, load, pf) cell through
    both ratio schemes and derive the blind zone at the minimum fault
    resistance."""
    grid = grid or SweepGrid()
    base = copy.deepcopy(base_config)
    base.setdefault("kind", "64g2")
    if base["kind"] != "64g2":
        raise ConfigError("sensitivity sweep applies to 64g2 configs")
    seed = int(base.get("seed", 0))
    fs = float(_profile_from(base).get("fs", 1000.0))
    onset = int(base.get("onset_sample", DEFAULT_ONSET_SAMPLE))
    calibration = _resolve_calibration(base)
    cells = grid.cells()

    def run_cell(item):
        index, (x, rf, load, pf) = item
        cfg = copy.deepcopy(base)
        cfg["fault"] = {"x": x, "rf": rf, "t_on": onset / fs}
        cfg.setdefault("profile", {})
        cfg["profile"]["load_pu"] = load
        cfg["profile"]["pf"] = pf
        cfg["profile"].setdefault("duration", (onset / fs) + DETECTION_WINDOW_S + 0.25)
        cfg["seed"] = _derive_seed(seed, 1, index)
        cfg["calibration"] = {"ratio": calibration.ratio, "beta_ng": calibration.beta_ng}
        result = run_scenario(cfg, name=f"cell_{index}")
        row = {
            "x": x, "rf": rf, "load_pu": load, "pf": pf,
            "detected_adaptive": bool(result.verdicts["a64g2"]["detected"]),
            "detected_fixed": bool(result.verdicts["ng64g2"]["detected"]),
            "latency_adaptive_samples": result.verdicts["a64g2"]["latency_samples"],
            "latency_fixed_samples": result.verdicts["ng64g2"]["latency_samples"],
        }
        return index, row

    rows: List[Optional[Dict[str, Any]]] = [None] * len(cells)
    with concurrent.futures.ThreadPoolExecutor(max_workers=thread_budget()) as pool:
        for index, row in pool.map(run_cell, enumerate(cells)):
            rows[index] = row

    min_rf = min(grid.rfs)
    blind_taps = []
    for tap in sorted(set(grid.taps)):
        tap_rows = [r for r in rows if r["x"] == tap and r["rf"] == min_rf]
        if tap_rows and all(
            not r["detected_adaptive"] and not r["detected_fixed"] for r in tap_rows
        ):
            blind_taps.append(tap)
    blind_zone = _contiguous_intervals(blind_taps, sorted(set(grid.taps)))

    return ReliabilityReport(
        study="sensitivity",
        cells=rows,
        blind_zone=blind_zone,
        calibration={"ratio": calibration.ratio, "beta_ng": calibration.beta_ng},
        meta={
            "seed": seed,
            "fs": fs,
            "onset_sample": onset,
            "min_rf": min_rf,
            "detection_window_s": DETECTION_WINDOW_S,
            "grid": {"taps": list(grid.taps), "rfs": list(grid.rfs),
                     "loads": list(grid.loads), "pfs": list(grid.pfs)},
        },
    )


def _contiguous_intervals(blind_taps: List[float], all_taps: List[float]) -> List[List[float]]:
    if not blind_taps:
        return []
    blind = set(blind_taps)
    intervals: List[List[float]] = []
    start = None
    prev = None
    for tap in all_taps:
        if tap in blind:
            if start is None:
                start = tap
            prev = tap
        else:
            if start is not None:
                intervals.append([start, prev])
                start = None
    if start is not None:
        intervals.append([start, prev])
    return intervals


def default_security_catalog() -> List[Dict[str, Any]]:
    """Non-fault disturbance scenarios: instrument-channel deterioration,
    load/power-factor events, and start/stop speed ramps, for the ratio
    schemes; speed scenarios also exercise the injection scheme."""
    ramp = {"t_on": 0.3, "t_off": 1.3}
    catalog: List[Dict[str, Any]] = [
        {"name": "neutral_scale_12p5", "kind": "64g2",
         "disturbances": [{"kind": "neutral_pt_scale", "magnitude": 0.875, **ramp}],
         "profile": {"duration": 2.0}},
        {"name": "neutral_scale_60", "kind": "64g2",
         "disturbances": [{"kind": "neutral_pt_scale", "magnitude": 0.4, **ramp}],
         "profile": {"duration": 2.0}},
        {"name": "terminal_scale_60", "kind": "64g2",
         "disturbances": [{"kind": "terminal_pt_scale", "magnitude": 0.4,
                           "t_on": 0.3, "t_off": 2.3}],
         "profile": {"duration": 3.0}},
        {"name": "load_step_4to3kw", "kind": "64g2",
         "disturbances": [{"kind": "load_step", "magnitude": 0.75, "t_on": 0.5}],
         "profile": {"load_pu": 1.0, "duration": 1.5}},
        {"name": "load_step_5to3kw", "kind": "64g2",
         "disturbances": [{"kind": "load_step", "magnitude": 0.6, "t_on": 0.5}],
         "profile": {"load_pu": 1.0, "duration": 1.5}},
        {"name": "pf_swing_full_load", "kind": "64g2",
         "disturbances": [{"kind": "pf_swing", "magnitude": -0.85, "t_on": 0.5, "t_off": 1.0}],
         "profile": {"load_pu": 1.0, "pf": 0.85, "duration": 2.0}},
        {"name": "pf_swing_no_load", "kind": "64g2",
         "disturbances": [{"kind": "pf_swing", "magnitude": -0.85, "t_on": 0.5, "t_off": 1.0}],
         "profile": {"load_pu": 0.0, "pf": 0.85, "duration": 2.0}},
        {"name": "gen_start", "kind": "64g2",
         "disturbances": [{"kind": "gen_start", "t_on": 0.0, "t_off": 5.0}],
         "profile": {"duration": 6.0}},
        {"name": "gen_stop", "kind": "64g2",
         "disturbances": [{"kind": "gen_stop", "t_on": 0.5, "t_off": 5.5}],
         "profile": {"duration": 6.0}},
        {"name": "gen_start_64s", "kind": "64s",
         "profile": {"duration": 3.5, "speed": {"t_start": 0.5, "t_end": 3.0,
                                                "start": 0.0, "end": 1.0}}},
        {"name": "gen_stop_64s", "kind": "64s",
         "profile": {"duration": 3.5, "speed": {"t_start": 0.5, "t_end": 3.0,
                                                "start": 1.0, "end": 0.0}}},
        {"name": "speed_600rpm", "kind": "64s",
         "profile": {"duration": 3.0, "speed": {"t_start": 1.0, "t_end": 1.5,
                                                "start": 1.0, "end": 1.0 / 3.0}}},
    ]
    return catalog


def sweep_security(scenarios: Optional[List[Dict[str, Any]]],
                   base_config: Dict[str, Any]) -> ReliabilityReport:
    """Misoperation study: run each non-fault scenario through the ratio
    schemes (and the injection scheme for speed scenarios); any trip is a
    misoperation."""
    catalog = scenarios if scenarios is not None else default_security_catalog()
    base = copy.deepcopy(base_config)
    seed = int(base.get("seed", 0))
    calibration = _resolve_calibration({**base, "kind": "64g2"})
    rows: List[Dict[str, Any]] = []
    misoperations: List[Dict[str, Any]] = []
    for index, scenario in enumerate(catalog):
        if scenario.get("fault"):
            raise ConfigError(
                f"security scenario {scenario.get('name', index)!r} must not contain a fault")
        cfg = copy.deepcopy(base)
        cfg.pop("fault", None)
        cfg.pop("disturbances", None)
        cfg["kind"] = scenario.get("kind", "64g2")
        if "disturbances" in scenario:
            cfg["disturbances"] = copy.deepcopy(scenario["disturbances"])
        profile = dict(cfg.get("profile", {}))
        profile.update(scenario.get("profile", {}))
        cfg["profile"] = profile
        cfg["seed"] = _derive_seed(seed, 2, index)
        if cfg["kind"] == "64g2":
            cfg["calibration"] = {"ratio": calibration.ratio,
                                  "beta_ng": calibration.beta_ng}
        else:
            profile.setdefault("speed", 1.0)
        name = scenario.get("name", f"scenario_{index}")
        result = run_scenario(cfg, name=name)
        for scheme, verdict in result.verdicts.items():
            tripped = bool(verdict["tripped"])
            row = {"scenario": name, "scheme": scheme, "tripped": tripped,
                   "margin": verdict.get("margin")}
            rows.append(row)
            if tripped:
                misoperations.append(row)
    return ReliabilityReport(
        study="security",
        cells=rows,
        misoperations=misoperations,
        calibration={"ratio": calibration.ratio, "beta_ng": calibration.beta_ng},
        meta={"seed": seed, "scenario_count": len(catalog)},
    )


def emit_report(obj, out_dir, fmt: str = "json") -> List[str]:
    """Write a scenario result or sweep report to disk.

    Always writes report.json (sorted keys, no timestamps, so identical
    inputs give identical bytes); scenario results also get per-scheme
    trace CSVs; fmt 'csv' adds tabular and long-format (trace, signal,
    t, value) files."""
    if fmt not in ("json", "csv"):
        raise ConfigError(f"format must be 'json' or 'csv', got {fmt!r}")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise RuntimeError(f"cannot create output directory {out}: {exc}") from exc
    written: List[str] = []

    if isinstance(obj, ReliabilityReport):
        payload = obj.to_dict()
        payload["digest"] = obj.digest()
        written.append(_write_json(out / "report.json", payload))
        if fmt == "csv":
            written.append(_write_rows_csv(out / "cells.csv", obj.cells))
            written.append(_write_rows_csv(out / "misoperations.csv", obj.misoperations))
        return written

    if isinstance(obj, ScenarioResult):
        written.append(_write_json(out / "report.json", obj.to_dict()))
        for scheme, trace in obj.traces.items():
            path = out / f"trace_{scheme}.csv"
            if isinstance(trace, SchemeTrace):
                write_trace_csv(trace, path)
            elif isinstance(trace, A64STrace):
                write_a64s_trace_csv(trace, path)
            else:
                continue
            written.append(str(path))
        if fmt == "csv":
            written.append(_write_long_csv(out / "long.csv", obj))
        return written

    raise ConfigError(f"cannot emit a report for {type(obj).__name__}")


def _write_json(path: Path, payload) -> str:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return str(path)


def _write_rows_csv(path: Path, rows: List[Dict[str, Any]]) -> str:
    lines = []
    if rows:
        keys = sorted(rows[0].keys())
        lines.append(",".join(keys))
        for row in rows:
            lines.append(",".join(_csv_cell(row.get(k)) for k in keys))
    else:
        lines.append("")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return str(path)


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_long_csv(path: Path, result: ScenarioResult) -> str:
    lines = ["trace,signal,t,value"]
    for scheme, trace in result.traces.items():
        if isinstance(trace, SchemeTrace):
            signals = {
                "VP3": trace.v_p3, "VN3": trace.v_n3, "rho_hat": trace.rho_hat,
                "residual": trace.residual, "JAO": trace.operate,
                "JAR": trace.restraint, "trip": [int(b) for b in trace.trip],
            }
            indices, fs = trace.t_index, trace.fs
        elif isinstance(trace, A64STrace):
            signals = {
                "vn": trace.v_n, "in": trace.i_n, "a0_hat": trace.a0_hat,
                "kd_hat": trace.kd_hat,
                "tau0_hat_ms": [v * 1e3 for v in trace.tau0_hat],
                "rs_hat_ohm": trace.rs_hat,
                "c0_hat_uF": [v * 1e6 for v in trace.c0_hat],
                "x_hat": trace.x_hat, "trip": [int(b) for b in trace.trip],
            }
            indices, fs = trace.t_index, trace.fs
        else:
            continue
        for name in sorted(signals):
            series = signals[name]
            for idx, value in zip(indices, series):
                lines.append(f"{scheme},{name},{idx / fs!r},{_csv_cell(float(value))}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return str(path)
