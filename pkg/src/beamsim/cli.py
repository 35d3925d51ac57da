"""``beamsim`` command-line front end.

Exit codes: 0 success, 1 I/O failure, 2 invalid configuration or argument,
3 numerically degenerate geometry.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .beamformer import (BeamTarget, TxPlacement, compute_phase_profile, generate_codebook,
                         profile_to_configuration)
from .errors import CalibrationInvalid, ConfigInvalid, DegenerateGeometry, InvalidArgument
from .experiments import (RunOptions, configure, emit_reports, format_summary, pattern_grid,
                          run_preset, quadrant_sweep, write_codebook_csv, write_constellation_csv,
                          write_matrix_csv, write_pattern_csv, write_psd_csv, write_sweep_csv)
from .fieldsim import first_null_radius, pattern_metrics, reflected_pattern, simulate_link
from .geometry import build_geometry, load_geometry
from .phase_law import DEFAULT_FREQUENCY, default_synthetic_law, load_law
from .scenario import PRESETS, load_experiment, load_preset, preset_path


def _common(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("global options")
    g.add_argument("--geometry", type=Path, help="geometry file (rows, cols, pitch_m[, quadrant_map])")
    g.add_argument("--law", type=Path, help="calibration CSV (default: synthetic law)")
    g.add_argument("--scenario", type=Path, help="scenario file")
    g.add_argument("--dac-bits", type=int, default=None, help="DAC resolution, 1..16 (default 8)")
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--out", type=Path, default=Path("."), help="output directory")
    g.add_argument("--incident", choices=("spherical", "planar"), default="spherical")
    g.add_argument("--near-field", action="store_true",
                   help="focus on the point at --focus-distance along the target direction")
    g.add_argument("--focus-distance", type=float, default=None, help="near-field focus range, m")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="beamsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pattern", help="reflected far-field pattern for one target")
    _common(p)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--phi", type=float, required=True)
    p.add_argument("--tx-distance", type=float, default=3.2, help="TX range on boresight, m")
    p.add_argument("--frequency", type=float, default=DEFAULT_FREQUENCY)
    p.add_argument("--step", type=float, default=1.0, help="grid step, deg")
    p.add_argument("--mainlobe-radius", type=float, default=None)

    p = sub.add_parser("link", help="link report for one configuration of a scenario")
    _common(p)
    p.add_argument("--config", default=None, help="configuration name (default: first)")
    p.add_argument("--symbols", type=int, default=512)

    p = sub.add_parser("codebook", help="voltage codebook over a theta/phi grid")
    _common(p)
    p.add_argument("--theta", type=float, nargs="+", required=True)
    p.add_argument("--phi", type=float, nargs="+", required=True)
    p.add_argument("--tx-distance", type=float, default=3.2)
    p.add_argument("--frequency", type=float, default=DEFAULT_FREQUENCY)
    p.add_argument("--voltage-maps", action="store_true", help="also write a rows x cols map per entry")

    p = sub.add_parser("preset", help="run an experiment preset")
    _common(p)
    p.add_argument("name", choices=PRESETS)
    p.add_argument("--symbols", type=int, default=512)
    p.add_argument("--step", type=float, default=1.0, help="pattern grid step, deg")
    p.add_argument("--summary-format", choices=("json", "text"), default="json")

    p = sub.add_parser("sweep", help="quadrant-by-quadrant switch between two configurations")
    _common(p)
    p.add_argument("--from", dest="old", default="A")
    p.add_argument("--to", dest="new", default="B")
    p.add_argument("--order", type=int, nargs=4, default=[0, 1, 2, 3])
    p.add_argument("--rx", default=None, help="RX treated as the new target (default: nearest)")
    p.add_argument("--symbols", type=int, default=64)
    return parser


def _geometry_and_law(args):
    geometry = load_geometry(args.geometry) if args.geometry else None
    law = load_law(args.law) if args.law else None
    return geometry, law


def _focus(args, default: float) -> float | None:
    if not args.near_field:
        return None
    return args.focus_distance if args.focus_distance is not None else default


def _experiment(args, default_preset: str):
    geometry, law = _geometry_and_law(args)
    path = args.scenario or preset_path(default_preset)
    exp = load_experiment(path, geometry, law)
    if args.seed is not None:
        exp = replace(exp, scenario=replace(exp.scenario, seed=args.seed))
    return exp


def cmd_pattern(args) -> int:
    geometry, law = _geometry_and_law(args)
    geometry = geometry or build_geometry()
    law = law or default_synthetic_law()
    tx = TxPlacement((0.0, 0.0, args.tx_distance))
    target = BeamTarget(args.theta, args.phi)
    profile = compute_phase_profile(geometry, tx, target, args.frequency, args.incident,
                                    _focus(args, 3.5))
    cfg = profile_to_configuration(profile, law, 8 if args.dac_bits is None else args.dac_bits)
    theta, phi = pattern_grid(args.step)
    pat = reflected_pattern(geometry, cfg, tx, args.frequency, theta, phi)
    radius = args.mainlobe_radius or first_null_radius(geometry, args.frequency)
    m = pattern_metrics(pat, target, radius)
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / f"pattern_{args.theta:g}_{args.phi:g}.csv"
    write_pattern_csv(pat, path)
    write_matrix_csv(geometry.to_grid(cfg.voltages), args.out / f"pattern_{args.theta:g}_{args.phi:g}_voltages.csv")
    print(f"peak ({m.peak_direction[0]:g}, {m.peak_direction[1]:g}) deg, error {m.peak_error_deg:.3f} deg, "
          f"sidelobe contrast {m.sidelobe_contrast_db:.2f} dB (main-lobe radius {radius:.2f} deg), "
          f"saturated {cfg.saturated_count}")
    print(f"wrote {path}")
    return 0


def cmd_link(args) -> int:
    exp = _experiment(args, "setup1")
    name = args.config or next(iter(exp.configurations), None)
    if name is None or name not in exp.configurations:
        raise ConfigInvalid(f"unknown configuration {name!r}; have {sorted(exp.configurations)}")
    bits = exp.dac_bits if args.dac_bits is None else args.dac_bits
    cfg = configure(exp.scenario, exp.configurations[name], bits, args.incident,
                    _focus(args, exp.focus_distance))
    report = simulate_link(exp.scenario.with_config(cfg), args.symbols)
    args.out.mkdir(parents=True, exist_ok=True)
    write_psd_csv({name: report}, args.out / f"{exp.name}_{name}_psd.csv")
    write_constellation_csv({name: report}, args.out / f"{exp.name}_{name}_constellation.csv")
    for r in report.rx:
        print(f"{r.name:<6} power {r.power_db:8.2f} dB  EVM {r.evm_percent:6.1f} %")
    return 0


def cmd_codebook(args) -> int:
    geometry, law = _geometry_and_law(args)
    geometry = geometry or build_geometry()
    law = law or default_synthetic_law()
    tx = TxPlacement((0.0, 0.0, args.tx_distance))
    bits = 8 if args.dac_bits is None else args.dac_bits
    book = generate_codebook(geometry, tx, law, args.theta, args.phi, args.frequency, bits,
                             args.incident, _focus(args, 3.5))
    args.out.mkdir(parents=True, exist_ok=True)
    write_codebook_csv(book, args.out / "codebook.csv")
    if args.voltage_maps:
        for target, cfg in book:
            write_matrix_csv(geometry.to_grid(cfg.voltages),
                             args.out / f"codebook_{target.theta:g}_{target.phi:g}_voltages.csv")
    print(f"wrote {len(book)} entries to {args.out / 'codebook.csv'}")
    return 0


def cmd_preset(args) -> int:
    geometry, law = _geometry_and_law(args)
    exp = load_experiment(args.scenario, geometry, law) if args.scenario else load_preset(args.name, geometry, law)
    options = RunOptions(dac_bits=args.dac_bits, seed=args.seed, incident=args.incident,
                         near_field=args.near_field, pattern_step_deg=args.step,
                         n_symbols=args.symbols)
    if args.near_field and args.focus_distance is not None:
        exp = replace(exp, focus_distance=args.focus_distance)
    result = run_preset(exp, None, options)
    files = emit_reports(result, args.out, args.summary_format)
    print(format_summary(result.summary))
    print(f"wrote {len(files)} files to {args.out}")
    return 0


def cmd_sweep(args) -> int:
    exp = _experiment(args, "setup2")
    for key in (args.old, args.new):
        if key not in exp.configurations:
            raise ConfigInvalid(f"unknown configuration {key!r}; have {sorted(exp.configurations)}")
    bits = exp.dac_bits if args.dac_bits is None else args.dac_bits
    trace = quadrant_sweep(exp.scenario, exp.configurations[args.old], exp.configurations[args.new],
                           args.order, bits, args.incident, _focus(args, exp.focus_distance),
                           args.rx, args.symbols)
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / f"{exp.name}_sweep_{args.old}_{args.new}.csv"
    write_sweep_csv(trace, path)
    for s in trace.steps:
        powers = "  ".join(f"{k} {v:7.2f}" for k, v in s.power_db.items())
        print(f"step {s.step_index}: {powers}  |coherent@{trace.new_rx}| {s.coherent_magnitude:.4g}")
    print(f"wrote {path}")
    return 0


COMMANDS = {"pattern": cmd_pattern, "link": cmd_link, "codebook": cmd_codebook,
            "preset": cmd_preset, "sweep": cmd_sweep}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigInvalid, CalibrationInvalid, InvalidArgument) as exc:
        print(f"beamsim: error: {exc}", file=sys.stderr)
        return 2
    except DegenerateGeometry as exc:
        print(f"beamsim: degenerate geometry: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"beamsim: I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
