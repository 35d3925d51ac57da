"""RX1/RX3 power contrast of set-up 1 (config A) versus direct-path leakage.

    python3 scripts/leakage_sweep.py --lo -80 --hi 0 --step 2
"""
import argparse

import numpy as np

from beamsim.experiments import configure
from beamsim.fieldsim import simulate_link
from beamsim.scenario import load_preset


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lo", type=float, default=-80.0)
    ap.add_argument("--hi", type=float, default=0.0)
    ap.add_argument("--step", type=float, default=2.0)
    ap.add_argument("--config", default="A")
    args = ap.parse_args()

    preset = load_preset("setup1")
    sc = preset.scenario
    sc = sc.with_config(configure(sc, preset.configurations[args.config], preset.dac_bits))
    print("leakage_db,rx1_db,rx2_db,rx3_db,contrast_db")
    for level in [None] + list(np.arange(args.lo, args.hi + args.step / 2, args.step)):
        rep = simulate_link(sc.with_direct_gain(level), 16)
        p = [rep.power_db(i) for i in range(3)]
        tag = "blocked" if level is None else f"{level:.1f}"
        print(f"{tag},{p[0]:.3f},{p[1]:.3f},{p[2]:.3f},{p[0] - p[2]:.3f}")


if __name__ == "__main__":
    main()
