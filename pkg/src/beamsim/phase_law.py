"""Varactor voltage <-> reflection phase/amplitude calibration law.

A law is a table of (voltage, phase, amplitude) samples, interpolated
piecewise-linearly. Phases are in degrees, amplitudes in dB (<= 0).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CalibrationInvalid, InvalidArgument

DEFAULT_FREQUENCY = 5.25e9
DEFAULT_V_MAX = 5.0
CSV_HEADER = ("voltage_v", "phase_deg", "amplitude_db")

# synthetic S-curve parameters
SYNTH_SPAN_DEG = 330.0
SYNTH_SLOPE = 1.2  # 1/V, tanh steepness
SYNTH_RIPPLE_DB = 0.5


@dataclass(frozen=True)
class PhaseVoltageSample:
    voltage: float
    phase: float
    amplitude: float = 0.0


@dataclass(frozen=True)
class PhaseVoltageLaw:
    """Monotone voltage -> (phase, amplitude) calibration at one frequency."""

    voltages: np.ndarray
    phases: np.ndarray
    amplitudes_db: np.ndarray
    frequency: float = DEFAULT_FREQUENCY
    v_max: float = DEFAULT_V_MAX
    # (lo, hi) phase bounds, filled in __post_init__
    phase_bounds: tuple[float, float] = field(init=False, compare=False)

    def __post_init__(self):
        v = np.array(self.voltages, dtype=float)
        p = np.array(self.phases, dtype=float)
        a = np.array(self.amplitudes_db, dtype=float)
        if v.ndim != 1 or v.shape != p.shape or v.shape != a.shape:
            raise CalibrationInvalid("voltage, phase and amplitude columns differ in length")
        if v.size < 2:
            raise CalibrationInvalid(f"need at least 2 samples, got {v.size}")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(p)) and np.all(np.isfinite(a))):
            raise CalibrationInvalid("non-finite calibration value")
        if np.any(v < 0) or np.any(v > self.v_max):
            raise CalibrationInvalid(f"voltage outside [0, {self.v_max}] V")
        if np.any(np.diff(v) <= 0):
            raise CalibrationInvalid("voltages must be strictly increasing")
        if v[0] != 0.0 or v[-1] != self.v_max:
            raise CalibrationInvalid(
                f"law must cover [0, {self.v_max}] V, got [{v[0]}, {v[-1]}]")
        dp = np.diff(p)
        if not (np.all(dp > 0) or np.all(dp < 0)):
            raise CalibrationInvalid("phase is not strictly monotone in voltage")
        if abs(p[-1] - p[0]) > 360.0:
            raise CalibrationInvalid(f"phase span {abs(p[-1] - p[0]):.3f} deg exceeds 360 deg")
        if np.any(a > 0):
            raise CalibrationInvalid("amplitude_db must be <= 0")
        for arr in (v, p, a):
            arr.setflags(write=False)
        object.__setattr__(self, "voltages", v)
        object.__setattr__(self, "phases", p)
        object.__setattr__(self, "amplitudes_db", a)
        object.__setattr__(self, "phase_bounds", (float(min(p[0], p[-1])), float(max(p[0], p[-1]))))

    @property
    def samples(self) -> list[PhaseVoltageSample]:
        return [PhaseVoltageSample(float(v), float(p), float(a))
                for v, p, a in zip(self.voltages, self.phases, self.amplitudes_db)]

    @property
    def span(self) -> float:
        return abs(float(self.phases[-1] - self.phases[0]))

    @property
    def decreasing(self) -> bool:
        return bool(self.phases[-1] < self.phases[0])

    @classmethod
    def from_samples(cls, samples, frequency=DEFAULT_FREQUENCY, v_max=DEFAULT_V_MAX):
        samples = sorted(samples, key=lambda s: s.voltage)
        return cls(np.array([s.voltage for s in samples]),
                   np.array([s.phase for s in samples]),
                   np.array([s.amplitude for s in samples]),
                   frequency=frequency, v_max=v_max)


def synthetic_phase_deg(v):
    """Closed-form S-curve, 0 deg at 0 V down to -330 deg at 5 V."""
    half = SYNTH_SPAN_DEG / 2
    v = np.asarray(v, dtype=float)
    phase = -half * (1.0 + np.tanh(SYNTH_SLOPE * (v - DEFAULT_V_MAX / 2)) / math.tanh(3.0))
    return np.clip(phase, -SYNTH_SPAN_DEG, 0.0)


def synthetic_amplitude_db(v):
    v = np.asarray(v, dtype=float)
    return -SYNTH_RIPPLE_DB * np.sin(np.pi * v / DEFAULT_V_MAX) ** 2


def default_synthetic_law(n_samples: int = 501) -> PhaseVoltageLaw:
    """Stand-in law at 5.25 GHz used when no measured calibration is supplied.

    The tanh argument reaches +-3 at the rails, so dividing by tanh(3) puts
    the endpoints exactly at 0 and -330 deg.
    """
    if n_samples < 2:
        raise InvalidArgument("n_samples must be >= 2")
    v = np.linspace(0.0, DEFAULT_V_MAX, n_samples)
    phase = synthetic_phase_deg(v)
    phase[0], phase[-1] = 0.0, -SYNTH_SPAN_DEG
    amp = synthetic_amplitude_db(v)
    amp[0] = amp[-1] = 0.0
    return PhaseVoltageLaw(v, phase, amp, frequency=DEFAULT_FREQUENCY, v_max=DEFAULT_V_MAX)


def _check_range(law: PhaseVoltageLaw, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if np.any(~np.isfinite(v)) or np.any(v < 0) or np.any(v > law.v_max):
        raise InvalidArgument(f"voltage outside [0, {law.v_max}] V")
    return v


def phase_of_voltage(law: PhaseVoltageLaw, v):
    """Interpolated reflection phase in degrees. Accepts scalars or arrays."""
    v = _check_range(law, v)
    out = np.interp(v, law.voltages, law.phases)
    return float(out) if out.ndim == 0 else out


def amplitude_of_voltage(law: PhaseVoltageLaw, v):
    """Linear reflection gain, 10**(amplitude_db / 20)."""
    v = _check_range(law, v)
    out = 10.0 ** (np.interp(v, law.voltages, law.amplitudes_db) / 20.0)
    return float(out) if out.ndim == 0 else out


def invert_phases(law: PhaseVoltageLaw, target_deg):
    """Vectorised inverse of the law.

    Returns ``(volts, achieved_deg, saturated)``. Targets are wrapped into the
    360 deg window starting at the law's lowest phase. Targets in the
    unreachable gap snap to the nearer span endpoint (circular distance); on a
    tie the endpoint with the larger ``|phase|`` wins.
    """
    t = np.asarray(target_deg, dtype=float)
    lo, hi = law.phase_bounds
    wrapped = lo + np.mod(t - lo, 360.0)
    wrapped = np.where(wrapped >= lo + 360.0, lo, wrapped)
    saturated = wrapped > hi

    # np.interp wants increasing abscissae
    if law.decreasing:
        xp, fp = law.phases[::-1], law.voltages[::-1]
    else:
        xp, fp = law.phases, law.voltages
    volts = np.interp(np.minimum(wrapped, hi), xp, fp)
    achieved = wrapped.copy()

    if np.any(saturated):
        d_hi = wrapped - hi
        d_lo = lo + 360.0 - wrapped
        hi_wins_tie = abs(hi) >= abs(lo)
        pick_hi = (d_hi < d_lo) | ((d_hi == d_lo) & hi_wins_tie)
        # decreasing law: the highest phase sits at 0 V
        if law.decreasing:
            v_hi, v_lo = law.voltages[0], law.voltages[-1]
        else:
            v_hi, v_lo = law.voltages[-1], law.voltages[0]
        sat_v = np.where(pick_hi, v_hi, v_lo)
        sat_p = np.where(pick_hi, hi, lo)
        volts = np.where(saturated, sat_v, volts)
        achieved = np.where(saturated, sat_p, achieved)
    return volts, achieved, saturated


def voltage_of_phase(law: PhaseVoltageLaw, target_phase: float) -> tuple[float, float]:
    """Bias voltage realising ``target_phase`` (deg) and the phase actually achieved."""
    volts, achieved, _ = invert_phases(law, target_phase)
    return float(volts), float(achieved)


def load_law(path: str | Path, frequency: float = DEFAULT_FREQUENCY,
             v_max: float = DEFAULT_V_MAX) -> PhaseVoltageLaw:
    """Read a ``voltage_v,phase_deg,amplitude_db`` CSV calibration table."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise CalibrationInvalid(f"{path}: empty calibration file")
            names = [n.strip() for n in reader.fieldnames]
            if "voltage_v" not in names or "phase_deg" not in names:
                raise CalibrationInvalid(f"{path}: header must contain voltage_v,phase_deg")
            rows = []
            for lineno, raw in enumerate(reader, start=2):
                row = {k.strip(): (val or "").strip() for k, val in raw.items() if k is not None}
                if not any(row.values()):
                    continue
                try:
                    amp = row.get("amplitude_db") or "0"
                    rows.append(PhaseVoltageSample(float(row["voltage_v"]),
                                                   float(row["phase_deg"]), float(amp)))
                except ValueError as exc:
                    raise CalibrationInvalid(f"{path}:{lineno}: {exc}") from exc
    except OSError as exc:
        raise CalibrationInvalid(f"{path}: {exc}") from exc
    if len(rows) < 2:
        raise CalibrationInvalid(f"{path}: need at least 2 samples, got {len(rows)}")
    try:
        return PhaseVoltageLaw.from_samples(rows, frequency=frequency, v_max=v_max)
    except CalibrationInvalid as exc:
        raise CalibrationInvalid(f"{path}: {exc}") from exc


def save_law(law: PhaseVoltageLaw, path: str | Path) -> None:
    # repr() keeps every bit, so save/load is lossless
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for v, p, a in zip(law.voltages, law.phases, law.amplitudes_db):
            writer.writerow((repr(float(v)), repr(float(p)), repr(float(a))))
