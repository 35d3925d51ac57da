"""Pointing, sidelobe contrast and DAC loss for the set-up 1 configurations.

    python3 scripts/beam_patterns.py --step 0.5 --out results/
"""
import argparse
from pathlib import Path

import numpy as np

from beamsim.beamformer import compute_phase_profile, profile_to_configuration
from beamsim.experiments import pattern_grid, write_pattern_csv
from beamsim.fieldsim import array_factor, first_null_radius, pattern_metrics, reflected_pattern
from beamsim.scenario import load_preset


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--step", type=float, default=1.0, help="pattern grid step in degrees")
    ap.add_argument("--out", type=Path, default=None, help="directory for pattern CSVs")
    args = ap.parse_args()

    preset = load_preset("setup1")
    sc = preset.scenario
    theta, phi = pattern_grid(args.step)
    radius = first_null_radius(sc.geometry, sc.carrier)
    print(f"main-lobe radius {radius:.2f} deg, grid step {args.step} deg")
    print(f"{'cfg':>3} {'target':>14} {'peak':>14} {'err':>5} {'contrast':>9} "
          f"{'8-bit loss':>10} {'1-bit loss':>10}")
    for name, target in preset.configurations.items():
        prof = compute_phase_profile(sc.geometry, sc.tx, target, sc.carrier)
        cfg = profile_to_configuration(prof, sc.law, preset.dac_bits)
        pat = reflected_pattern(sc.geometry, cfg, sc.tx, sc.carrier, theta, phi)
        m = pattern_metrics(pat, target, radius)
        d = target.direction[None]
        peak = {b: abs(array_factor(sc.geometry, profile_to_configuration(prof, sc.law, b),
                                    sc.tx, sc.carrier, d)[0]) for b in (None, 8, 1)}
        loss = {b: 20 * np.log10(peak[None] / peak[b]) for b in (8, 1)}
        print(f"{name:>3} ({target.theta:5.1f},{target.phi:6.1f}) "
              f"({m.peak_direction[0]:5.1f},{m.peak_direction[1]:6.1f}) {m.peak_error_deg:5.2f} "
              f"{m.sidelobe_contrast_db:8.2f}  {loss[8]:9.4f}  {loss[1]:9.2f}")
        if args.out is not None:
            args.out.mkdir(parents=True, exist_ok=True)
            write_pattern_csv(pat, args.out / f"setup1_{name}_pattern.csv")


if __name__ == "__main__":
    main()
