"""Experiment presets, quadrant-stepped reconfiguration and result export."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .beamformer import (BeamTarget, RisConfiguration, compute_phase_profile,
                         profile_to_configuration)
from .fieldsim import (FieldPattern, LinkReport, PatternMetrics, Scenario, first_null_radius,
                       pattern_metrics, received_power_contrast, reflected_pattern,
                       ris_contributions, simulate_link)
from .geometry import DEFAULT_LEAK_CURRENT, estimate_bias_power
from .errors import InvalidArgument
from .scenario import ExperimentPreset, load_preset

FLOAT_FMT = "%.9g"


@dataclass
class RunOptions:
    dac_bits: int | None = None  # None: use the preset's value
    seed: int | None = None
    incident: str = "spherical"
    near_field: bool = False
    pattern_step_deg: float = 1.0
    n_symbols: int = 512
    mainlobe_radius: float | None = None  # None: first-null radius of the array
    direct_path_gain_db: float | None | str = "keep"  # "keep", a dB value, or None (blocked)
    leak_current: float = DEFAULT_LEAK_CURRENT


@dataclass
class ConfigResult:
    name: str
    target: BeamTarget
    configuration: RisConfiguration
    pattern: FieldPattern
    metrics: PatternMetrics
    report: LinkReport


@dataclass
class PresetResult:
    name: str
    scenario: Scenario
    preset: ExperimentPreset
    configs: dict[str, ConfigResult]
    summary: dict = field(default_factory=dict)


def configure(scenario: Scenario, target: BeamTarget, dac_bits: int | None = 8,
              incident: str = "spherical", focus_distance: float | None = None) -> RisConfiguration:
    """Tune the scenario's RIS toward ``target`` at the carrier frequency."""
    profile = compute_phase_profile(scenario.geometry, scenario.tx, target, scenario.carrier,
                                    incident, focus_distance)
    return profile_to_configuration(profile, scenario.law, dac_bits)


def _prepare(preset: ExperimentPreset, options: RunOptions) -> Scenario:
    sc = preset.scenario
    if options.seed is not None:
        sc = replace(sc, seed=int(options.seed))
    if options.direct_path_gain_db != "keep":
        sc = sc.with_direct_gain(options.direct_path_gain_db)
    return sc


def pattern_grid(step: float) -> tuple[np.ndarray, np.ndarray]:
    if not step > 0:
        raise InvalidArgument("pattern step must be positive")
    return np.arange(0.0, 90.0, step), np.arange(0.0, 360.0, step)


def run_preset(name: str | ExperimentPreset, output_dir: str | Path | None = None,
               options: RunOptions | None = None) -> PresetResult:
    """Tune, simulate and (optionally) export every configuration of a preset."""
    options = options or RunOptions()
    preset = load_preset(name) if isinstance(name, str) else name
    scenario = _prepare(preset, options)
    bits = preset.dac_bits if options.dac_bits is None else options.dac_bits
    focus = preset.focus_distance if options.near_field else None
    radius = options.mainlobe_radius or first_null_radius(scenario.geometry, scenario.carrier)
    theta, phi = pattern_grid(options.pattern_step_deg)

    results = {}
    for cname, target in preset.configurations.items():
        cfg = configure(scenario, target, bits, options.incident, focus)
        sc = scenario.with_config(cfg)
        pat = reflected_pattern(sc.geometry, cfg, sc.tx, sc.carrier, theta, phi)
        results[cname] = ConfigResult(cname, target, cfg, pat, pattern_metrics(pat, target, radius),
                                      simulate_link(sc, options.n_symbols))

    out = PresetResult(preset.name, scenario, preset, results)
    out.summary = summarize(out, radius, options.leak_current)
    if output_dir is not None:
        emit_reports(out, output_dir)
    return out


def _finite(x: float) -> float | None:
    return float(x) if math.isfinite(x) else None


def summarize(result: PresetResult, mainlobe_radius: float, leak_current: float) -> dict:
    sc = result.scenario
    names = [rx.name for rx in sc.rxs]
    law = sc.law
    summary = {
        "preset": result.name,
        "cells": sc.geometry.n_cells,
        "carrier_hz": sc.carrier,
        "mainlobe_radius_deg": mainlobe_radius,
        "bias_power_stress_w": estimate_bias_power(np.full(sc.geometry.n_cells, law.v_max),
                                                   leak_current),
        "configurations": {},
    }
    for cname, cr in result.configs.items():
        powers = {n: _finite(cr.report.power_db(i)) for i, n in enumerate(names)}
        targeted = result.preset.targeted_rx.get(cname, ())
        contrasts = {}
        for t in targeted:
            for other in names:
                if other not in targeted:
                    c = received_power_contrast(cr.report, names.index(t), names.index(other))
                    contrasts[f"{t}-{other}"] = _finite(c)
        summary["configurations"][cname] = {
            "theta_deg": cr.target.theta,
            "phi_deg": cr.target.phi,
            "targets": list(targeted),
            "power_db": powers,
            "evm_percent": {r.name: _finite(r.evm_percent) for r in cr.report.rx},
            "contrast_db": contrasts,
            "peak_direction_deg": list(cr.metrics.peak_direction),
            "peak_error_deg": cr.metrics.peak_error_deg,
            "sidelobe_contrast_db": _finite(cr.metrics.sidelobe_contrast_db),
            "saturated_cells": cr.configuration.saturated_count,
            "bias_power_w": estimate_bias_power(cr.configuration.voltages, leak_current),
        }
    return summary


def format_summary(summary: dict) -> str:
    """Human-readable table of a preset summary."""
    lines = [f"preset {summary['preset']}: {summary['cells']} cells, "
             f"carrier {summary['carrier_hz'] / 1e9:.3f} GHz"]
    for cname, c in summary["configurations"].items():
        lines.append(f"config {cname} (theta={c['theta_deg']:g}, phi={c['phi_deg']:g}) "
                     f"-> {', '.join(c['targets']) or '-'}")
        for rx, p in c["power_db"].items():
            p_txt = "-inf" if p is None else f"{p:8.2f}"
            lines.append(f"  {rx:<6} power {p_txt} dB   EVM {c['evm_percent'][rx] or float('nan'):6.1f} %")
        for pair, v in c["contrast_db"].items():
            lines.append(f"  contrast {pair}: {v:.2f} dB")
        sl = c["sidelobe_contrast_db"]
        lines.append(f"  peak ({c['peak_direction_deg'][0]:g}, {c['peak_direction_deg'][1]:g}) "
                     f"error {c['peak_error_deg']:.2f} deg, sidelobe contrast "
                     f"{'inf' if sl is None else format(sl, '.2f')} dB, "
                     f"saturated {c['saturated_cells']}")
        lines.append(f"  bias power {c['bias_power_w']:.3e} W")
    lines.append(f"bias power, all cells at v_max: {summary['bias_power_stress_w']:.3e} W")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# quadrant-stepped reconfiguration

@dataclass(frozen=True)
class SweepStep:
    step_index: int
    active: tuple[str, str, str, str]  # "old" / "new" per quadrant
    power_db: dict[str, float]
    coherent_magnitude: float  # |sum of new-config terms at the new-target RX|


@dataclass(frozen=True)
class SweepTrace:
    steps: tuple[SweepStep, ...]
    new_rx: str
    quadrant_order: tuple[int, int, int, int]


def mix_configurations(old: RisConfiguration, new: RisConfiguration, mask: np.ndarray) -> RisConfiguration:
    """Cells where ``mask`` is true take the new configuration."""
    sat = None
    if old.saturated is not None and new.saturated is not None:
        sat = np.where(mask, new.saturated, old.saturated)
    return RisConfiguration(np.where(mask, new.voltages, old.voltages),
                            np.where(mask, new.achieved_phases, old.achieved_phases),
                            np.where(mask, new.achieved_gains, old.achieved_gains),
                            0 if sat is None else int(np.count_nonzero(sat)), sat)


def _closest_rx(scenario: Scenario, target: BeamTarget) -> int:
    v = target.direction
    cos = [np.dot(np.asarray(rx.position) / np.linalg.norm(rx.position), v) for rx in scenario.rxs]
    return int(np.argmax(cos))


def quadrant_sweep(scenario: Scenario, old_target: BeamTarget, new_target: BeamTarget,
                   quadrant_order: Sequence[int] = (0, 1, 2, 3), dac_bits: int | None = 8,
                   incident: str = "spherical", focus_distance: float | None = None,
                   new_rx: int | str | None = None, n_symbols: int = 64,
                   old_config: RisConfiguration | None = None,
                   new_config: RisConfiguration | None = None) -> SweepTrace:
    """Switch from old to new configuration one control quadrant at a time.

    Step 0 is the old configuration everywhere; step k has the first k
    quadrants of ``quadrant_order`` on the new configuration.
    """
    order = tuple(int(q) for q in quadrant_order)
    if sorted(order) != [0, 1, 2, 3]:
        raise InvalidArgument(f"quadrant_order must be a permutation of 0..3, got {order}")
    old = old_config or configure(scenario, old_target, dac_bits, incident, focus_distance)
    new = new_config or configure(scenario, new_target, dac_bits, incident, focus_distance)
    if new_rx is None:
        rx_i = _closest_rx(scenario, new_target)
    elif isinstance(new_rx, str):
        rx_i = scenario.rx_index(new_rx)
    else:
        rx_i = int(new_rx)

    quads = scenario.geometry.quadrants
    new_terms = ris_contributions(scenario, rx_i, scenario.carrier, config=new)
    steps = []
    for k in range(5):
        switched = order[:k]
        mask = np.isin(quads, switched)
        cfg = mix_configurations(old, new, mask)
        report = simulate_link(scenario.with_config(cfg), n_symbols)
        active = tuple("new" if q in switched else "old" for q in range(4))
        steps.append(SweepStep(k, active,
                               {r.name: r.power_db for r in report.rx},
                               float(abs(np.sum(new_terms[mask])))))
    return SweepTrace(tuple(steps), scenario.rxs[rx_i].name, order)


# ---------------------------------------------------------------------------
# export

def _fmt(x: float) -> str:
    return FLOAT_FMT % x


def write_pattern_csv(pattern: FieldPattern, path: str | Path) -> None:
    db = pattern.db
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["theta_deg\\phi_deg"] + [_fmt(p) for p in pattern.phi_grid])
        for t, row in zip(pattern.theta_grid, db):
            w.writerow([_fmt(t)] + [_fmt(v) for v in row])


def write_matrix_csv(matrix: np.ndarray, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in np.atleast_2d(matrix):
            w.writerow([_fmt(v) for v in row])


def write_psd_csv(reports: dict[str, LinkReport], path: str | Path) -> None:
    """One column per (configuration, RX); a single key drops the prefix."""
    cols, series = [], []
    freqs = None
    for cname, rep in reports.items():
        for r in rep.rx:
            cols.append(r.name if len(reports) == 1 else f"{cname}_{r.name}")
            series.append(r.psd_db)
            freqs = r.frequencies
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frequency_hz"] + cols)
        for i, f in enumerate(freqs):
            w.writerow([_fmt(f)] + [_fmt(s[i]) for s in series])


def write_constellation_csv(reports: dict[str, LinkReport], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["config", "rx", "re", "im"])
        for cname, rep in reports.items():
            for r in rep.rx:
                for z in r.constellation:
                    w.writerow([cname, r.name, _fmt(z.real), _fmt(z.imag)])


def write_codebook_csv(codebook, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        n = codebook[0][1].n_cells if codebook else 0
        w.writerow(["theta_deg", "phi_deg"] + [f"v{i}" for i in range(n)])
        for target, cfg in codebook:
            w.writerow([_fmt(target.theta), _fmt(target.phi)] + [_fmt(v) for v in cfg.voltages])


def write_sweep_csv(trace: SweepTrace, path: str | Path) -> None:
    names = list(trace.steps[0].power_db)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "q0", "q1", "q2", "q3"] + [f"{n}_power_db" for n in names]
                   + ["coherent_magnitude"])
        for s in trace.steps:
            w.writerow([s.step_index, *s.active] + [_fmt(s.power_db[n]) for n in names]
                       + [_fmt(s.coherent_magnitude)])


def emit_reports(result: PresetResult, output_dir: str | Path, format: str = "json") -> list[Path]:
    """Write pattern, voltage-map, PSD, constellation and summary files.

    File names are ``<preset>_<config>_pattern.csv``, ``<preset>_<config>_voltages.csv``,
    ``<preset>_psd.csv``, ``<preset>_constellation.csv`` and
    ``<preset>_summary.json`` (or ``.txt`` with ``format="text"``).
    """
    if format not in ("json", "text"):
        raise InvalidArgument(f"unknown summary format {format!r}")
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for cname, cr in result.configs.items():
        p = out / f"{result.name}_{cname}_pattern.csv"
        write_pattern_csv(cr.pattern, p)
        written.append(p)
        p = out / f"{result.name}_{cname}_voltages.csv"
        write_matrix_csv(result.scenario.geometry.to_grid(cr.configuration.voltages), p)
        written.append(p)
    reports = {c: cr.report for c, cr in result.configs.items()}
    p = out / f"{result.name}_psd.csv"
    write_psd_csv(reports, p)
    written.append(p)
    p = out / f"{result.name}_constellation.csv"
    write_constellation_csv(reports, p)
    written.append(p)
    if format == "json":
        p = out / f"{result.name}_summary.json"
        p.write_text(json.dumps(result.summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    else:
        p = out / f"{result.name}_summary.txt"
        p.write_text(format_summary(result.summary) + "\n", encoding="utf-8")
    written.append(p)
    return written
