"""Reflected-pattern synthesis and end-to-end link simulation.

Phasor convention: propagation over a path of length L contributes
exp(+j*2*pi*L/lambda). This is the convention under which the compensation
beta_n = -alpha_n makes the cell contributions add in phase, and it is used
consistently by the pattern, the RIS link term, the direct path and the taps.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .beamformer import (SPEED_OF_LIGHT, TWO_PI, BeamTarget, RisConfiguration, TxPlacement,
                         incident_path, unit_vector)
from .errors import DegenerateGeometry, InvalidArgument
from .geometry import ArrayGeometry
from .phase_law import PhaseVoltageLaw

Direction = BeamTarget

DEFAULT_CARRIER = 5.25e9
DEFAULT_BANDWIDTH = 60e6
DEFAULT_SUBCARRIERS = 64
PSK_ORDER = 8
# below this a path length counts as coincident endpoints
_MIN_DISTANCE = 1e-9
_CHUNK = 4096


@dataclass(frozen=True)
class FieldPattern:
    frequency: float
    theta_grid: np.ndarray
    phi_grid: np.ndarray
    gains: np.ndarray  # complex, normalised so max |gain| = 1
    peak_gain: float = 1.0  # un-normalised max |gain|

    @property
    def db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 20.0 * np.log10(np.abs(self.gains))


@dataclass(frozen=True)
class PatternMetrics:
    peak_direction: tuple[float, float]
    peak_error_deg: float
    sidelobe_contrast_db: float  # +inf when nothing radiates outside the main lobe


@dataclass(frozen=True)
class Tap:
    delay: float  # s
    gain_db: float
    phase: float = 0.0  # rad


@dataclass(frozen=True)
class Receiver:
    name: str
    position: tuple[float, float, float]
    direct_path_gain_db: float | None = None  # None: blocked
    taps: tuple[Tap, ...] = ()

    def __post_init__(self):
        pos = tuple(float(c) for c in self.position)
        if len(pos) != 3 or not all(np.isfinite(pos)):
            raise InvalidArgument(f"RX {self.name!r}: position must be a finite 3-vector")
        if pos[2] <= 0:
            raise InvalidArgument(f"RX {self.name!r}: must be in front of the array (z > 0)")
        object.__setattr__(self, "position", pos)

    @property
    def blocked(self) -> bool:
        return self.direct_path_gain_db is None


@dataclass(frozen=True)
class Scenario:
    geometry: ArrayGeometry
    law: PhaseVoltageLaw
    config: RisConfiguration
    tx: TxPlacement
    rxs: tuple[Receiver, ...]
    carrier: float = DEFAULT_CARRIER
    bandwidth: float = DEFAULT_BANDWIDTH
    n_subcarriers: int = DEFAULT_SUBCARRIERS
    multipath_taps: tuple[Tap, ...] = ()  # applied to every RX
    seed: int = 0
    name: str = ""

    def __post_init__(self):
        if self.config.n_cells != self.geometry.n_cells:
            raise InvalidArgument("configuration size does not match geometry")
        if not self.carrier > 0:
            raise InvalidArgument("carrier must be positive")
        if self.bandwidth < 0:
            raise InvalidArgument("bandwidth must be non-negative")
        if int(self.n_subcarriers) != self.n_subcarriers or self.n_subcarriers < 1:
            raise InvalidArgument("n_subcarriers must be a positive integer")
        names = [rx.name for rx in self.rxs]
        if len(set(names)) != len(names):
            raise InvalidArgument(f"duplicate RX names in {names}")

    def rx_index(self, name: str) -> int:
        for i, rx in enumerate(self.rxs):
            if rx.name == name:
                return i
        raise InvalidArgument(f"no RX named {name!r}")

    def with_config(self, config: RisConfiguration) -> "Scenario":
        return replace(self, config=config)

    def with_direct_gain(self, gain_db: float | None) -> "Scenario":
        """Same scenario with one direct-path gain applied to every RX."""
        return replace(self, rxs=tuple(replace(rx, direct_path_gain_db=gain_db) for rx in self.rxs))

    @property
    def subcarriers(self) -> np.ndarray:
        k = np.arange(self.n_subcarriers)
        spacing = self.bandwidth / self.n_subcarriers
        return self.carrier + (k - (self.n_subcarriers - 1) / 2.0) * spacing


# ---------------------------------------------------------------------------
# reflected pattern

def array_factor(geometry: ArrayGeometry, config: RisConfiguration, tx: TxPlacement,
                 frequency: float, directions: np.ndarray) -> np.ndarray:
    """Un-normalised sum_n g_n exp(j(beta_n + alpha_n(d))) for (M, 3) unit vectors."""
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    k = TWO_PI * frequency / SPEED_OF_LIGHT
    d1 = incident_path(geometry, tx, "spherical")
    base = config.achieved_phases + k * d1
    g = config.achieved_gains
    pos = geometry.positions
    out = np.empty(directions.shape[0], dtype=complex)
    for s in range(0, directions.shape[0], _CHUNK):
        # w_n . v = -p_n . v
        phase = base[None, :] - k * (directions[s:s + _CHUNK] @ pos.T)
        out[s:s + _CHUNK] = np.exp(1j * phase) @ g
    return out


def reflected_pattern(geometry: ArrayGeometry, config: RisConfiguration, tx: TxPlacement,
                      frequency: float, theta_grid: Sequence[float],
                      phi_grid: Sequence[float]) -> FieldPattern:
    theta_grid = np.asarray(theta_grid, dtype=float)
    phi_grid = np.asarray(phi_grid, dtype=float)
    if theta_grid.size == 0 or phi_grid.size == 0:
        raise InvalidArgument("pattern grids must be non-empty")
    tt, pp = np.meshgrid(theta_grid, phi_grid, indexing="ij")
    dirs = unit_vector(tt, pp).reshape(-1, 3)
    raw = array_factor(geometry, config, tx, frequency, dirs).reshape(tt.shape)
    peak = float(np.max(np.abs(raw)))
    gains = raw / peak if peak > 0 else raw
    return FieldPattern(frequency, theta_grid, phi_grid, gains, peak)


def angular_distance(theta1, phi1, theta2, phi2) -> np.ndarray:
    """Great-circle distance in degrees between (theta, phi) directions."""
    a = unit_vector(theta1, phi1)
    b = unit_vector(theta2, phi2)
    dot = np.clip(np.sum(a * b, axis=-1), -1.0, 1.0)
    return np.degrees(np.arccos(dot))


def first_null_radius(geometry: ArrayGeometry, frequency: float) -> float:
    """Broadside first-null half-width of the shorter array side, in degrees.

    Used as the default main-lobe disc radius: it is the widest the main lobe
    gets in any cut.
    """
    lam = SPEED_OF_LIGHT / frequency
    short = min(geometry.rows, geometry.cols) * geometry.pitch
    return float(np.degrees(np.arcsin(min(1.0, lam / short))))


def pattern_metrics(pattern: FieldPattern, target: BeamTarget,
                    mainlobe_radius: float) -> PatternMetrics:
    """Peak direction, pointing error and main-lobe to max-sidelobe contrast."""
    if not mainlobe_radius > 0:
        raise InvalidArgument("mainlobe_radius must be positive")
    th, ph = pattern.theta_grid, pattern.phi_grid
    if not (th.min() <= target.theta <= th.max() and ph.min() <= target.phi <= ph.max()):
        raise InvalidArgument(f"pattern grid does not cover target {target}")
    mag = np.abs(pattern.gains)
    i, j = np.unravel_index(np.argmax(mag), mag.shape)
    peak_dir = (float(th[i]), float(ph[j]))
    peak_err = float(angular_distance(peak_dir[0], peak_dir[1], target.theta, target.phi))

    tt, pp = np.meshgrid(th, ph, indexing="ij")
    dist = angular_distance(tt, pp, peak_dir[0], peak_dir[1])
    outside = mag[dist > mainlobe_radius]
    side = outside.max() if outside.size else 0.0
    if side == 0.0:
        contrast = float("inf")
    else:
        contrast = float(20.0 * np.log10(mag[i, j] / side))
    return PatternMetrics(peak_dir, peak_err, contrast)


# ---------------------------------------------------------------------------
# link

def _segments(scenario: Scenario, rx: Receiver) -> tuple[np.ndarray, np.ndarray]:
    pos = scenario.geometry.positions
    d1 = np.linalg.norm(pos - scenario.tx.xyz, axis=1)
    d2 = np.linalg.norm(np.asarray(rx.position) - pos, axis=1)
    if np.any(d1 < _MIN_DISTANCE):
        raise DegenerateGeometry("TX coincides with a unit cell")
    if np.any(d2 < _MIN_DISTANCE):
        raise DegenerateGeometry(f"RX {rx.name!r} coincides with a unit cell")
    return d1, d2


def ris_contributions(scenario: Scenario, rx_index: int, frequency: float,
                      config: RisConfiguration | None = None) -> np.ndarray:
    """Per-cell complex terms of the RIS path at one frequency."""
    rx = _receiver(scenario, rx_index)
    config = scenario.config if config is None else config
    d1, d2 = _segments(scenario, rx)
    lam_ref = SPEED_OF_LIGHT / scenario.carrier
    norm = d1 * d2 * (4.0 * np.pi / lam_ref)
    prop = np.exp(1j * (TWO_PI * (d1 + d2) * frequency / SPEED_OF_LIGHT))
    return config.achieved_gains * np.exp(1j * config.achieved_phases) * prop / norm


def coherent_bound(scenario: Scenario, rx_index: int, cells: np.ndarray | None = None) -> float:
    """Upper bound sum g_n / (d1 d2 4pi/lambda_ref) on the RIS term magnitude."""
    rx = _receiver(scenario, rx_index)
    d1, d2 = _segments(scenario, rx)
    lam_ref = SPEED_OF_LIGHT / scenario.carrier
    terms = scenario.config.achieved_gains / (d1 * d2 * 4.0 * np.pi / lam_ref)
    return float(np.sum(terms if cells is None else terms[cells]))


def _receiver(scenario: Scenario, rx_index: int) -> Receiver:
    if not 0 <= rx_index < len(scenario.rxs):
        raise InvalidArgument(f"rx_index {rx_index} out of range")
    return scenario.rxs[rx_index]


def channel_response(scenario: Scenario, rx_index: int, frequencies) -> np.ndarray:
    """H(f) = direct + RIS + taps for each frequency, summed in fixed cell order."""
    rx = _receiver(scenario, rx_index)
    f = np.atleast_1d(np.asarray(frequencies, dtype=float))
    d1, d2 = _segments(scenario, rx)
    lam_ref = SPEED_OF_LIGHT / scenario.carrier
    w = scenario.config.achieved_gains * np.exp(1j * scenario.config.achieved_phases)
    w = w / (d1 * d2 * (4.0 * np.pi / lam_ref))
    path = d1 + d2

    h = np.empty(f.shape, dtype=complex)
    for i, fi in enumerate(f):
        h[i] = np.sum(w * np.exp(1j * (TWO_PI * path * fi / SPEED_OF_LIGHT)))

    if not rx.blocked:
        d_direct = float(np.linalg.norm(np.asarray(rx.position) - scenario.tx.xyz))
        if d_direct < _MIN_DISTANCE:
            raise DegenerateGeometry(f"RX {rx.name!r} coincides with the TX")
        amp = 10.0 ** (rx.direct_path_gain_db / 20.0) / d_direct
        h = h + amp * np.exp(1j * (TWO_PI * f * d_direct / SPEED_OF_LIGHT))

    for tap in scenario.multipath_taps + rx.taps:
        h = h + 10.0 ** (tap.gain_db / 20.0) * np.exp(1j * (tap.phase + TWO_PI * f * tap.delay))
    return h


def link_gain(scenario: Scenario, rx_index: int, frequency: float) -> complex:
    return complex(channel_response(scenario, rx_index, [frequency])[0])


# ---------------------------------------------------------------------------
# OFDM / 8-PSK reporting

@dataclass(frozen=True)
class RxReport:
    name: str
    frequencies: np.ndarray
    gains: np.ndarray
    power_db: float
    psd_db: np.ndarray
    constellation: np.ndarray
    evm_percent: float


@dataclass(frozen=True)
class LinkReport:
    rx: tuple[RxReport, ...]
    symbols: np.ndarray = field(repr=False)  # transmitted PSK indices

    def power_db(self, i: int) -> float:
        return self.rx[i].power_db

    def __getitem__(self, name: str) -> RxReport:
        for r in self.rx:
            if r.name == name:
                return r
        raise KeyError(name)


def psk_symbols(n_symbols: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, PSK_ORDER, size=n_symbols)


def nearest_psk(points: np.ndarray) -> np.ndarray:
    m = np.mod(np.round(np.angle(points) / (TWO_PI / PSK_ORDER)), PSK_ORDER)
    return np.exp(1j * m * TWO_PI / PSK_ORDER)


def evm_percent(points: np.ndarray) -> float:
    if points.size == 0:
        return float("nan")
    ideal = nearest_psk(points)
    err = np.sqrt(np.mean(np.abs(points - ideal) ** 2))
    ref = np.sqrt(np.mean(np.abs(ideal) ** 2))
    return float(100.0 * err / ref)


def rx_report(name: str, frequencies: np.ndarray, gains: np.ndarray,
              symbols: np.ndarray) -> RxReport:
    """Build one receiver's report from its per-subcarrier channel.

    Symbol i rides subcarrier ``i mod K``; the received points are divided by
    the RMS channel magnitude.
    """
    gains = np.asarray(gains, dtype=complex)
    p = np.abs(gains) ** 2
    mean_p = float(np.mean(p))
    with np.errstate(divide="ignore"):
        psd = 10.0 * np.log10(p)
        power = 10.0 * np.log10(mean_p) if mean_p > 0 else float("-inf")
    if mean_p == 0:
        return RxReport(name, frequencies, gains, power, psd, np.empty(0, complex), float("nan"))
    tx_points = np.exp(1j * symbols * TWO_PI / PSK_ORDER)
    h = gains[np.arange(symbols.size) % gains.size]
    points = tx_points * h / np.sqrt(mean_p)
    return RxReport(name, frequencies, gains, power, psd, points, evm_percent(points))


def simulate_link(scenario: Scenario, n_symbols: int = 512) -> LinkReport:
    """Per-RX subcarrier gains, PSD, 8-PSK constellation and EVM.

    No synchronisation or equalisation is applied: the constellation shows
    the raw channel (delay ramp, carrier rotation, frequency selectivity).
    """
    if int(n_symbols) != n_symbols or n_symbols < 1:
        raise InvalidArgument("n_symbols must be a positive integer")
    rng = np.random.default_rng(scenario.seed)
    symbols = psk_symbols(int(n_symbols), rng)
    freqs = scenario.subcarriers
    reports = tuple(
        rx_report(rx.name, freqs, channel_response(scenario, i, freqs), symbols)
        for i, rx in enumerate(scenario.rxs))
    return LinkReport(reports, symbols)


def received_power_contrast(report: LinkReport, rx_i: int, rx_j: int) -> float:
    """Mean received power of RX i minus RX j, in dB."""
    for idx in (rx_i, rx_j):
        if not 0 <= idx < len(report.rx):
            raise InvalidArgument(f"rx index {idx} out of range")
    return report.power_db(rx_i) - report.power_db(rx_j)
