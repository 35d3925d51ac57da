"""Geometric open-loop tuning of the RIS toward a receive direction.

Each cell n gets the propagation phase

    alpha_n = 2*pi * (|u_n| + w_n . v) / lambda

where u_n runs from the TX to cell n, v is the unit vector toward the
receiver and w_n runs from cell n to the array centre (so w_n = -p_n for a
centred array). alpha_n is the excess path TX -> cell -> far-field RX
relative to the centre ray, in radians. The compensation phase is
beta_n = -alpha_n (mod 2*pi).

Angles: ``theta`` is the polar angle from boresight (+z), ``phi`` the azimuth
in the array plane measured from +x.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidArgument
from .geometry import ArrayGeometry
from .phase_law import PhaseVoltageLaw, amplitude_of_voltage, invert_phases, phase_of_voltage

SPEED_OF_LIGHT = 299792458.0
TWO_PI = 2.0 * np.pi
INCIDENT_MODES = ("spherical", "planar")


def unit_vector(theta_deg, phi_deg) -> np.ndarray:
    """Direction cosines ``(sin t cos p, sin t sin p, cos t)``; broadcasts, last axis = xyz."""
    t = np.radians(np.asarray(theta_deg, dtype=float))
    p = np.radians(np.asarray(phi_deg, dtype=float))
    st = np.sin(t)
    return np.stack([st * np.cos(p), st * np.sin(p), np.cos(t)], axis=-1)


@dataclass(frozen=True)
class BeamTarget:
    theta: float
    phi: float

    def __post_init__(self):
        if not 0.0 <= self.theta < 90.0:
            raise InvalidArgument(f"theta must be in [0, 90) deg, got {self.theta}")
        if not 0.0 <= self.phi < 360.0:
            raise InvalidArgument(f"phi must be in [0, 360) deg, got {self.phi}")

    @property
    def direction(self) -> np.ndarray:
        return unit_vector(self.theta, self.phi)


@dataclass(frozen=True)
class TxPlacement:
    position: tuple[float, float, float] = (0.0, 0.0, 3.2)

    def __post_init__(self):
        pos = tuple(float(c) for c in self.position)
        if len(pos) != 3 or not all(np.isfinite(pos)):
            raise InvalidArgument(f"TX position must be a finite 3-vector, got {self.position}")
        if pos[2] <= 0:
            raise InvalidArgument("TX must be in front of the array (z > 0)")
        object.__setattr__(self, "position", pos)

    @property
    def xyz(self) -> np.ndarray:
        return np.array(self.position)


@dataclass(frozen=True)
class PhaseProfile:
    frequency: float
    phases: np.ndarray  # rad, wrapped to [0, 2pi)


@dataclass(frozen=True)
class RisConfiguration:
    voltages: np.ndarray
    achieved_phases: np.ndarray  # rad
    achieved_gains: np.ndarray  # linear
    saturated_count: int = 0
    saturated: np.ndarray | None = None  # per-cell flag, when known

    def __post_init__(self):
        n = len(self.voltages)
        if len(self.achieved_phases) != n or len(self.achieved_gains) != n:
            raise InvalidArgument("configuration vectors differ in length")
        if self.saturated is not None and len(self.saturated) != n:
            raise InvalidArgument("saturation mask length differs from cell count")

    @property
    def n_cells(self) -> int:
        return len(self.voltages)

    @property
    def weights(self) -> np.ndarray:
        """Complex per-cell reflection coefficient g_n * exp(j beta_n)."""
        return self.achieved_gains * np.exp(1j * self.achieved_phases)


def wavelength_of(frequency: float) -> float:
    if not frequency > 0:
        raise InvalidArgument(f"frequency must be positive, got {frequency}")
    return SPEED_OF_LIGHT / frequency


def incident_path(geometry: ArrayGeometry, tx: TxPlacement, incident: str = "spherical") -> np.ndarray:
    """TX -> cell path length per cell, exact or under plane-wave incidence."""
    if incident not in INCIDENT_MODES:
        raise InvalidArgument(f"incident must be one of {INCIDENT_MODES}, got {incident!r}")
    pos = geometry.positions
    t = tx.xyz
    if incident == "spherical":
        return np.linalg.norm(pos - t, axis=1)
    r = np.linalg.norm(t)
    return r - pos @ (t / r)


def excess_path(geometry: ArrayGeometry, tx: TxPlacement, target: BeamTarget,
                incident: str = "spherical", focus_distance: float | None = None) -> np.ndarray:
    """|u_n| + w_n . v per cell, in metres.

    With ``focus_distance`` the far-field term is replaced by the exact
    distance from the cell to the point ``focus_distance * v`` (minus that
    distance, so both modes agree in the far field).
    """
    d1 = incident_path(geometry, tx, incident)
    v = target.direction
    if focus_distance is None:
        return d1 - geometry.positions @ v
    if not focus_distance > 0:
        raise InvalidArgument("focus_distance must be positive")
    focus = focus_distance * v
    return d1 + np.linalg.norm(focus - geometry.positions, axis=1) - focus_distance


def propagation_phases(geometry: ArrayGeometry, tx: TxPlacement, target: BeamTarget,
                       wavelength: float, incident: str = "spherical",
                       focus_distance: float | None = None, wrap: bool = True) -> np.ndarray:
    if not wavelength > 0:
        raise InvalidArgument("wavelength must be positive")
    alpha = TWO_PI * excess_path(geometry, tx, target, incident, focus_distance) / wavelength
    return np.mod(alpha, TWO_PI) if wrap else alpha


def propagation_phase(geometry: ArrayGeometry, tx: TxPlacement, target: BeamTarget,
                      wavelength: float, n: int, incident: str = "spherical") -> float:
    """alpha_n for a single cell, wrapped to [0, 2pi)."""
    if not 0 <= n < geometry.n_cells:
        raise InvalidArgument(f"cell index {n} out of range")
    return float(propagation_phases(geometry, tx, target, wavelength, incident)[n])


def _wrap_2pi(x: np.ndarray) -> np.ndarray:
    out = np.mod(x, TWO_PI)
    # mod of a tiny negative number rounds up to exactly 2pi
    out[out >= TWO_PI] = 0.0
    return out


def compute_phase_profile(geometry: ArrayGeometry, tx: TxPlacement, target: BeamTarget,
                          frequency: float, incident: str = "spherical",
                          focus_distance: float | None = None) -> PhaseProfile:
    lam = wavelength_of(frequency)
    alpha = propagation_phases(geometry, tx, target, lam, incident, focus_distance, wrap=False)
    return PhaseProfile(frequency, _wrap_2pi(-alpha))


def quantize_voltages(volts: np.ndarray, v_max: float, dac_bits: int) -> np.ndarray:
    """Snap to the nearest of 2**dac_bits uniform levels on [0, v_max]; ties round up."""
    if int(dac_bits) != dac_bits or not 1 <= dac_bits <= 16:
        raise InvalidArgument(f"dac_bits must be an integer in [1, 16], got {dac_bits}")
    n_steps = 2 ** int(dac_bits) - 1
    step = v_max / n_steps
    k = np.clip(np.floor(np.asarray(volts) / step + 0.5), 0, n_steps)
    return np.minimum(k * step, v_max)


def profile_to_configuration(profile: PhaseProfile, law: PhaseVoltageLaw,
                             dac_bits: int | None = 8) -> RisConfiguration:
    """Invert the law per cell, then quantise to the DAC grid.

    ``dac_bits=None`` skips quantisation (continuous bias).
    """
    volts, _, saturated = invert_phases(law, np.degrees(profile.phases))
    if dac_bits is not None:
        volts = quantize_voltages(volts, law.v_max, dac_bits)
    achieved = np.radians(phase_of_voltage(law, volts))
    gains = amplitude_of_voltage(law, volts)
    return RisConfiguration(np.asarray(volts, dtype=float), _wrap_2pi(np.atleast_1d(achieved)),
                            np.atleast_1d(gains), int(np.count_nonzero(saturated)),
                            np.asarray(saturated))


def ideal_configuration(profile: PhaseProfile, gains=1.0) -> RisConfiguration:
    """Unconstrained configuration realising the profile exactly.

    Voltages are NaN: this is the continuous-phase reference, not a bias map.
    """
    n = len(profile.phases)
    g = np.broadcast_to(np.asarray(gains, dtype=float), (n,)).copy()
    return RisConfiguration(np.full(n, np.nan), profile.phases.copy(), g, 0)


def generate_codebook(geometry: ArrayGeometry, tx: TxPlacement, law: PhaseVoltageLaw,
                      theta_grid: Sequence[float], phi_grid: Sequence[float],
                      frequency: float, dac_bits: int | None = 8,
                      incident: str = "spherical",
                      focus_distance: float | None = None) -> list[tuple[BeamTarget, RisConfiguration]]:
    """One configuration per (theta, phi) pair, theta-major order."""
    if len(theta_grid) == 0 or len(phi_grid) == 0:
        raise InvalidArgument("codebook grids must be non-empty")
    book = []
    for theta in theta_grid:
        for phi in phi_grid:
            target = BeamTarget(float(theta), float(phi))
            profile = compute_phase_profile(geometry, tx, target, frequency, incident, focus_distance)
            book.append((target, profile_to_configuration(profile, law, dac_bits)))
    return book
