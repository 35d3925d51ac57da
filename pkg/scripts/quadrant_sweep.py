"""Quadrant-by-quadrant switch from one set-up 2 configuration to another.

    python3 scripts/quadrant_sweep.py --old A --new B --out sweep.csv
"""
import argparse

from beamsim.experiments import quadrant_sweep, write_sweep_csv
from beamsim.scenario import load_preset


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", default="setup2")
    ap.add_argument("--old", default="A")
    ap.add_argument("--new", default="B")
    ap.add_argument("--order", default="0,1,2,3", help="quadrant switching order")
    ap.add_argument("--out", default=None, help="optional CSV path")
    args = ap.parse_args()

    preset = load_preset(args.preset)
    sc = preset.scenario
    new_rx = preset.targeted_rx[args.new][0]
    trace = quadrant_sweep(sc, preset.configurations[args.old], preset.configurations[args.new],
                           quadrant_order=[int(q) for q in args.order.split(",")],
                           dac_bits=preset.dac_bits, new_rx=new_rx)
    names = [rx.name for rx in sc.rxs]
    print("step  quadrants            " + "  ".join(f"{n:>8}" for n in names) + "  |new @ " + new_rx + "|")
    for s in trace.steps:
        print(f"{s.step_index:>4}  {','.join(s.active):20} "
              + "  ".join(f"{s.power_db[n]:8.2f}" for n in names) + f"  {s.coherent_magnitude:.4e}")
    if args.out:
        write_sweep_csv(trace, args.out)


if __name__ == "__main__":
    main()
