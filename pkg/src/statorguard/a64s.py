"""Sub-harmonic injection insulation monitoring and fault location.

A low-frequency test signal injected at the machine neutral sees the
stator insulation as a first-order RC load.  Discretizing that load with
the bilinear (trapezoidal) map turns identification into a two-parameter
linear regression on consecutive samples of the neutral voltage and
injected current; a 2-state Kalman adaptive filter tracks the regression
parameters, from which the insulation resistance and time constant are
extracted, a scalar filter refines the capacitance, and a drop detector
on the resistance estimate raises the trip.  When the machine is also
spinning, the fundamental-frequency neutral voltage of a fault feeds a
closed-form position estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .plantsim import Subharmonic64SConfig
from .signalcore import TimeSeries, extract_phasor, reconstruct_narrowband

__all__ = [
    "SubharmonicFrame",
    "ThetaKafState",
    "C0KafState",
    "ExtractorState",
    "InsulationDetectorConfig",
    "DetectionEvent",
    "CalibrationError",
    "A64SEstimatorConfig",
    "A64STrace",
    "A64SEstimator",
    "tustin_coeffs",
    "regression_step",
    "theta_kaf_update",
    "extract_params",
    "c0_kaf_update",
    "a64s_detect",
    "locate_fault",
    "locator_consistent",
    "frames_from_timeseries",
    "write_a64s_trace_csv",
    "HEALTHY_SENTINEL",
]

# Location reported while no fault is active.
HEALTHY_SENTINEL = 2.0


class CalibrationError(RuntimeError):
    """Raised when the healthy baseline cannot be established."""


@dataclass
class SubharmonicFrame:
    """One processed measurement sample for the injection scheme.

    v_n and i_n are the injection-band (narrowband-filtered) neutral
    voltage and injected current on the relay side; v_n60 is the
    extracted fundamental-frequency neutral magnitude referred to the
    machine side, used only by the locator.
    """

    t_index: int
    v_n: float
    i_n: float
    v_n60: float = 0.0
    valid: bool = True

    def __post_init__(self):
        if self.v_n60 < 0:
            raise ValueError("v_n60 must be >= 0")


@dataclass
class ThetaKafState:
    """Two-state Kalman adaptive filter over the regression parameters
    (feedback coefficient, drive gain) of the discretized insulation
    load, with the one-sample signal memories the regression needs."""

    theta_hat: np.ndarray = field(default_factory=lambda: np.zeros(2))
    cov: np.ndarray = field(default_factory=lambda: np.eye(2))
    process_noise: float = 1e-4
    measurement_noise: float = 0.25
    prev_vn: Optional[float] = None
    prev_in: Optional[float] = None
    t: int = 0

    def __post_init__(self):
        self.theta_hat = np.asarray(self.theta_hat, dtype=float).reshape(2)
        self.cov = np.asarray(self.cov, dtype=float).reshape(2, 2)
        if self.measurement_noise <= 0:
            raise ValueError("measurement_noise must be positive")
        if self.process_noise < 0:
            raise ValueError("process_noise must be >= 0")

    def copy(self) -> "ThetaKafState":
        return ThetaKafState(
            theta_hat=self.theta_hat.copy(), cov=self.cov.copy(),
            process_noise=self.process_noise,
            measurement_noise=self.measurement_noise,
            prev_vn=self.prev_vn, prev_in=self.prev_in, t=self.t,
        )


@dataclass
class C0KafState:
    """Scalar filter refining the capacitance from the extracted time
    constant and resistance (time constant = resistance * capacitance)."""

    c0_hat: float = 1e-6
    variance: float = 1e-10
    process_noise: float = 1e-16
    measurement_noise: float = 1e-6

    def __post_init__(self):
        if self.variance <= 0:
            raise ValueError("variance must be positive")
        if self.measurement_noise <= 0:
            raise ValueError("measurement_noise must be positive")
        if self.process_noise < 0:
            raise ValueError("process_noise must be >= 0")


@dataclass
class ExtractorState:
    """Parameter extraction stage: inverts the bilinear map, low-pass
    smooths both channels, and clamps to physical (non-negative) values.

    period is the sampling period; gamma the smoother rate (1/s,
    math.inf bypasses smoothing); turns_ratio refers the drive gain back
    to machine-side ohms.
    """

    period: float
    turns_ratio: float
    gamma: float = 10.0
    ratio_memory: Optional[float] = None
    gain_memory: Optional[float] = None
    tau0_hat: float = 0.0
    rs_hat: float = 0.0
    degenerate: bool = False

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError("period must be positive")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.turns_ratio <= 0:
            raise ValueError("turns_ratio must be positive")

    @property
    def smoothing_alpha(self) -> float:
        if math.isinf(self.gamma):
            return 1.0
        return 1.0 - math.exp(-self.gamma * self.period)


@dataclass(frozen=True)
class InsulationDetectorConfig:
    """Drop detector on the insulation-resistance estimate.

    The baseline is learned over baseline_window samples starting at
    baseline_start (letting the estimator settle first); a trip is
    declared after persistence consecutive samples below drop_fraction
    of the baseline.
    """

    baseline_start: int = 1000
    baseline_window: int = 250
    drop_fraction: float = 0.5
    persistence: int = 25

    def __post_init__(self):
        if self.baseline_start < 0 or self.baseline_window < 1:
            raise ValueError("baseline_start >= 0 and baseline_window >= 1 required")
        if not 0.0 < self.drop_fraction < 1.0:
            raise ValueError("drop_fraction must be in (0, 1)")
        if self.persistence < 1:
            raise ValueError("persistence must be >= 1")


@dataclass(frozen=True)
class DetectionEvent:
    """A latched detector event: sample index, kind, and the resistance
    estimate that sealed it."""

    index: int
    kind: str
    rs_value: float


def tustin_coeffs(k3: float, tau0: float, period: float) -> Tuple[float, float]:
    """Bilinear-map coefficients (drive gain, feedback coefficient) of a
    first-order gain/time-constant load sampled at the given period."""
    if period <= 0:
        raise ValueError("period must be positive")
    if tau0 < 0:
        raise ValueError("tau0 must be >= 0")
    denom = period + 2.0 * tau0
    return k3 * period / denom, (period - 2.0 * tau0) / denom


def regression_step(
    state: ThetaKafState, frame: SubharmonicFrame
) -> Optional[Tuple[np.ndarray, float]]:
    """Form the regression vector from consecutive samples and update the
    signal memories.  Returns None on a priming sample (no usable prior),
    otherwise (phi, summed current)."""
    if not frame.valid:
        raise ValueError("regression_step requires a valid frame")
    prev_vn, prev_in = state.prev_vn, state.prev_in
    state.prev_vn, state.prev_in = frame.v_n, frame.i_n
    if prev_vn is None or prev_in is None:
        return None
    u = prev_in + frame.i_n
    return np.array([-prev_vn, u]), u


def theta_kaf_update(
    state: ThetaKafState, v_n: float, phi: np.ndarray
) -> Tuple[ThetaKafState, float]:
    """One 2-state filter step; returns the new state and the innovation.

    Covariance is propagated first (information-form shrink plus process
    noise, re-symmetrized), then the gain derives from the updated
    covariance; this reduces to the scalar recursion when one regressor
    vanishes.
    """
    phi = np.asarray(phi, dtype=float).reshape(2)
    p = state.cov
    p_phi = p @ phi
    denom = state.measurement_noise + float(phi @ p_phi)
    cov = p - np.outer(p_phi, p_phi) / denom + state.process_noise * np.eye(2)
    cov = 0.5 * (cov + cov.T)
    gain = (cov @ phi) / state.measurement_noise
    innovation = v_n - float(phi @ state.theta_hat)
    new_state = state.copy()
    new_state.theta_hat = state.theta_hat + gain * innovation
    new_state.cov = cov
    new_state.t = state.t + 1
    return new_state, innovation


def extract_params(state: ExtractorState, theta_hat: np.ndarray) -> Tuple[float, float]:
    """Turn the tracked regression parameters into smoothed, clamped
    machine-side estimates (time constant s, insulation resistance ohms).

    The feedback coefficient inverts to the time constant through the
    bilinear map; the drive gain then inverts to the resistance, referred
    across the neutral transformer.  A feedback coefficient at the
    degenerate point -1 freezes the outputs for that step.
    """
    a0_hat, kd_hat = float(theta_hat[0]), float(theta_hat[1])
    alpha = state.smoothing_alpha
    t_s = state.period

    one_plus = 1.0 + a0_hat
    if abs(one_plus) < 1e-12:
        state.degenerate = True
    else:
        state.degenerate = False
        ratio_raw = (1.0 - a0_hat) / one_plus
        if state.ratio_memory is None:
            state.ratio_memory = ratio_raw
        else:
            state.ratio_memory += alpha * (ratio_raw - state.ratio_memory)
    tau0 = 0.5 * t_s * max(state.ratio_memory or 0.0, 0.0)

    gain_raw = (t_s + 2.0 * tau0) * kd_hat
    if state.gain_memory is None:
        state.gain_memory = gain_raw
    else:
        state.gain_memory += alpha * (gain_raw - state.gain_memory)
    rs = (state.turns_ratio**2 / t_s) * max(state.gain_memory, 0.0)

    state.tau0_hat = tau0
    state.rs_hat = rs
    return tau0, rs


def c0_kaf_update(state: C0KafState, tau0_hat: float, rs_hat: float) -> C0KafState:
    """Scalar capacitance refinement step: regress the extracted time
    constant on the extracted resistance."""
    if rs_hat < 0:
        raise ValueError("rs_hat must be >= 0")
    variance = (
        state.variance * state.measurement_noise
        / (state.measurement_noise + rs_hat**2 * state.variance)
        + state.process_noise
    )
    gain = variance * rs_hat / state.measurement_noise
    xi = tau0_hat - rs_hat * state.c0_hat
    return replace(state, c0_hat=state.c0_hat + gain * xi, variance=variance)


def locate_fault(
    v_n60: float,
    un: float,
    r_n: float,
    rs_f: float,
    tau0_f: float,
    fault_active: bool = True,
    f1: float = 60.0,
) -> float:
    """Fault position from the fundamental neutral voltage.

    Inverts the divider formed by the fault resistance against the
    grounding resistance shunted by the winding capacitance: the faulted
    winding fraction is proportional to the measured fundamental neutral
    magnitude scaled by the divider's impedance magnitude.  rs_f is the
    fault-path resistance, tau0_f = rs_f times the winding capacitance.
    With no active fault the sentinel 2 is returned.  Computed positions
    above 1.2 indicate inconsistent inputs (see locator_consistent).
    """
    if not fault_active:
        return HEALTHY_SENTINEL
    if un <= 0 or r_n <= 0:
        raise ValueError("un and r_n must be positive")
    if v_n60 < 0 or rs_f < 0 or tau0_f < 0:
        raise ValueError("v_n60, rs_f, tau0_f must be >= 0")
    omega = 2.0 * math.pi * f1
    return (v_n60 / (un * r_n)) * math.hypot(r_n + rs_f, omega * r_n * tau0_f)


def locator_consistent(x: float) -> bool:
    """True when a location output is physically interpretable: either
    the healthy sentinel or a position at most 20% beyond the winding."""
    return x == HEALTHY_SENTINEL or 0.0 <= x <= 1.2


class _DropLatch:
    """Streaming baseline learner + persistence trip latch on rs_hat."""

    def __init__(self, cfg: InsulationDetectorConfig):
        self.cfg = cfg
        self._seen = 0
        self._window: List[float] = []
        self.baseline: Optional[float] = None
        self._streak = 0
        self.tripped = False
        self.trip_index: Optional[int] = None
        self.trip_value: Optional[float] = None

    def update(self, index: int, rs_hat: float) -> bool:
        cfg = self.cfg
        self._seen += 1
        pos = self._seen - 1
        if self.baseline is None:
            if pos < cfg.baseline_start:
                return False
            self._window.append(rs_hat)
            if len(self._window) >= cfg.baseline_window:
                baseline = float(np.median(self._window))
                if baseline <= 0:
                    raise CalibrationError("baseline resistance is not positive")
                if min(self._window) < cfg.drop_fraction * baseline:
                    raise CalibrationError(
                        "baseline window already contains a resistance drop"
                    )
                self.baseline = baseline
            return False
        if self.tripped:
            return True
        if rs_hat < cfg.drop_fraction * self.baseline:
            self._streak += 1
        else:
            self._streak = 0
        if self._streak >= cfg.persistence:
            self.tripped = True
            self.trip_index = index
            self.trip_value = rs_hat
        return self.tripped


def a64s_detect(
    rs_stream: Sequence[float], cfg: Optional[InsulationDetectorConfig] = None
) -> List[DetectionEvent]:
    """Run the drop detector over a resistance-estimate stream.

    Raises CalibrationError when the stream cannot supply a clean
    baseline (too short, or the baseline window itself contains a drop).
    """
    cfg = cfg or InsulationDetectorConfig()
    needed = cfg.baseline_start + cfg.baseline_window
    if len(rs_stream) < needed:
        raise CalibrationError(
            f"stream of {len(rs_stream)} samples cannot fill the "
            f"{needed}-sample baseline"
        )
    latch = _DropLatch(cfg)
    events: List[DetectionEvent] = []
    for idx, rs in enumerate(rs_stream):
        was = latch.tripped
        latch.update(idx, float(rs))
        if latch.tripped and not was:
            events.append(DetectionEvent(index=latch.trip_index, kind="trip",
                                         rs_value=latch.trip_value))
    return events


def frames_from_timeseries(
    v_ts: TimeSeries,
    i_ts: TimeSeries,
    circuit: Subharmonic64SConfig,
    injection_cycles: int = 2,
    fundamental_cycles: int = 3,
) -> List[SubharmonicFrame]:
    """Pre-filter raw neutral-voltage / injected-current records into
    estimator frames.

    Both channels are narrowband-filtered at the injection frequency
    (the same linear filter on both preserves their discrete-time
    circuit relation exactly once warmed up); the fundamental component
    of the voltage channel is extracted separately, referred to the
    machine side, for the locator.
    """
    if v_ts.fs != i_ts.fs or len(v_ts) != len(i_ts) or v_ts.t0 != i_ts.t0:
        raise ValueError("voltage and current records must share fs, t0, length")
    ph_v = extract_phasor(v_ts, circuit.f_inj, injection_cycles)
    ph_i = extract_phasor(i_ts, circuit.f_inj, injection_cycles)
    ph_60 = extract_phasor(v_ts, circuit.f1, fundamental_cycles)
    v_band = reconstruct_narrowband(ph_v).samples
    i_band = reconstruct_narrowband(ph_i).samples
    v60 = ph_60.magnitude * circuit.turns_ratio
    frames = []
    for k in range(len(v_ts)):
        ok = bool(ph_v.valid[k] and ph_i.valid[k] and ph_60.valid[k])
        frames.append(
            SubharmonicFrame(
                t_index=k,
                v_n=float(v_band[k]),
                i_n=float(i_band[k]),
                v_n60=float(v60[k]) if ok else 0.0,
                valid=ok,
            )
        )
    return frames


@dataclass(frozen=True)
class A64SEstimatorConfig:
    """Tunables of the full estimation chain."""

    # measurement noise sized to the narrowband residual floor at percent
    # level channel noise; an overweighted R makes the prior wash out at
    # the weakly excited drive-gain direction's harmonic rate instead
    theta_process_noise: float = 1e-8
    theta_measurement_noise: float = 4e-3
    theta_initial_variance: float = 1.0
    c0_initial: float = 1e-6
    c0_initial_variance: float = 1e-10
    c0_process_noise: float = 1e-16
    c0_measurement_noise: float = 1e-6
    smoothing_rate: float = 10.0
    detector: InsulationDetectorConfig = field(default_factory=InsulationDetectorConfig)


@dataclass
class A64STrace:
    """Per-sample record of one estimator run plus summary fields."""

    fs: float
    t_index: List[int] = field(default_factory=list)
    v_n: List[float] = field(default_factory=list)
    i_n: List[float] = field(default_factory=list)
    a0_hat: List[float] = field(default_factory=list)
    kd_hat: List[float] = field(default_factory=list)
    tau0_hat: List[float] = field(default_factory=list)
    rs_hat: List[float] = field(default_factory=list)
    c0_hat: List[float] = field(default_factory=list)
    x_hat: List[float] = field(default_factory=list)
    trip: List[bool] = field(default_factory=list)
    valid: List[bool] = field(default_factory=list)
    baseline: Optional[float] = None
    onset_index: Optional[int] = None

    @property
    def first_trip_index(self) -> Optional[int]:
        for idx, tripped in zip(self.t_index, self.trip):
            if tripped:
                return idx
        return None

    @property
    def tripped(self) -> bool:
        return self.first_trip_index is not None

    def final_estimates(self, tail: int = 250) -> Tuple[float, float, float]:
        """(resistance, capacitance, time constant) medians over the last
        tail valid samples."""
        rows = [
            (r, c, tau)
            for r, c, tau, ok in zip(self.rs_hat, self.c0_hat, self.tau0_hat, self.valid)
            if ok
        ][-tail:]
        if not rows:
            raise ValueError("trace holds no valid samples")
        arr = np.array(rows)
        med = np.median(arr, axis=0)
        return float(med[0]), float(med[1]), float(med[2])

    def final_location(self, tail: int = 250) -> float:
        """Median located position over the last tail tripped samples, or
        the healthy sentinel when the run never tripped."""
        xs = [
            x for x, t in zip(self.x_hat, self.trip)
            if t and x != HEALTHY_SENTINEL
        ][-tail:]
        if not xs:
            return HEALTHY_SENTINEL
        return float(np.median(xs))


class A64SEstimator:
    """Full identification chain for one monitored machine."""

    def __init__(
        self,
        circuit: Subharmonic64SConfig,
        cfg: Optional[A64SEstimatorConfig] = None,
    ):
        self.circuit = circuit
        self.cfg = cfg or A64SEstimatorConfig()

    def run(self, frames: Iterable[SubharmonicFrame], fs: float,
            onset_index: Optional[int] = None) -> A64STrace:
        cfg = self.cfg
        period = 1.0 / fs
        theta = ThetaKafState(
            theta_hat=np.zeros(2),
            cov=cfg.theta_initial_variance * np.eye(2),
            process_noise=cfg.theta_process_noise,
            measurement_noise=cfg.theta_measurement_noise,
        )
        extractor = ExtractorState(period=period, turns_ratio=self.circuit.turns_ratio,
                                   gamma=cfg.smoothing_rate)
        c0 = C0KafState(
            c0_hat=cfg.c0_initial, variance=cfg.c0_initial_variance,
            process_noise=cfg.c0_process_noise,
            measurement_noise=cfg.c0_measurement_noise,
        )
        latch = _DropLatch(cfg.detector)
        trace = A64STrace(fs=fs, onset_index=onset_index)
        det_count = 0
        r_n = self.circuit.r_n_primary

        for frame in frames:
            if not frame.valid:
                theta.prev_vn = None
                theta.prev_in = None
                self._append(trace, frame, theta, extractor, c0, latch.tripped, False,
                             HEALTHY_SENTINEL)
                continue
            reg = regression_step(theta, frame)
            if reg is None:
                self._append(trace, frame, theta, extractor, c0, latch.tripped, False,
                             HEALTHY_SENTINEL)
                continue
            phi, _ = reg
            was_tripped = latch.tripped
            theta, _ = theta_kaf_update(theta, frame.v_n, phi)
            tau0, rs = extract_params(extractor, theta.theta_hat)
            c0 = c0_kaf_update(c0, tau0, rs)
            latch.update(det_count, rs)
            det_count += 1
            if latch.tripped and not was_tripped:
                # the circuit just changed structurally; re-open the filter
                # so the faulted parameters are re-identified quickly
                # instead of creeping in at the steady tracking rate
                theta.cov = cfg.theta_initial_variance * np.eye(2)
                extractor.ratio_memory = None
                extractor.gain_memory = None
            x_hat = HEALTHY_SENTINEL
            if latch.tripped and latch.baseline is not None:
                x_hat = self._locate(frame.v_n60, rs, c0.c0_hat, latch.baseline, r_n)
            self._append(trace, frame, theta, extractor, c0, latch.tripped, True, x_hat)
        trace.baseline = latch.baseline
        return trace

    def run_timeseries(self, v_ts: TimeSeries, i_ts: TimeSeries,
                       onset_index: Optional[int] = None) -> A64STrace:
        frames = frames_from_timeseries(v_ts, i_ts, self.circuit)
        return self.run(frames, v_ts.fs, onset_index=onset_index)

    def _locate(self, v_n60: float, rs_hat: float, c0_hat: float,
                baseline: float, r_n: float) -> float:
        if rs_hat <= 0 or rs_hat >= baseline:
            return HEALTHY_SENTINEL
        # The measured drop is the parallel combination of the healthy
        # insulation and the fault path; undo it to get the fault branch.
        rf_hat = 1.0 / (1.0 / rs_hat - 1.0 / baseline)
        tau0_f = rf_hat * max(c0_hat, 0.0)
        return locate_fault(v_n60, self.circuit.un, r_n, rf_hat, tau0_f,
                            fault_active=True, f1=self.circuit.f1)

    @staticmethod
    def _append(trace, frame, theta, extractor, c0, tripped, valid, x_hat):
        trace.t_index.append(frame.t_index)
        trace.v_n.append(frame.v_n)
        trace.i_n.append(frame.i_n)
        trace.a0_hat.append(float(theta.theta_hat[0]))
        trace.kd_hat.append(float(theta.theta_hat[1]))
        trace.tau0_hat.append(extractor.tau0_hat)
        trace.rs_hat.append(extractor.rs_hat)
        trace.c0_hat.append(c0.c0_hat)
        trace.x_hat.append(x_hat)
        trace.trip.append(bool(tripped))
        trace.valid.append(bool(valid))


def write_a64s_trace_csv(trace: A64STrace, path) -> None:
    """Write an estimator trace in the shared column layout (time
    constant in ms, resistance in ohms, capacitance in microfarads)."""
    lines = ["t,vn,in,a0_hat,kd_hat,tau0_hat_ms,rs_hat_ohm,c0_hat_uF,x_hat,trip"]
    for i in range(len(trace.t_index)):
        t = trace.t_index[i] / trace.fs
        lines.append(
            f"{t!r},{trace.v_n[i]!r},{trace.i_n[i]!r},{trace.a0_hat[i]!r},"
            f"{trace.kd_hat[i]!r},{trace.tau0_hat[i] * 1e3!r},{trace.rs_hat[i]!r},"
            f"{trace.c0_hat[i] * 1e6!r},{trace.x_hat[i]!r},{int(trace.trip[i])}"
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
