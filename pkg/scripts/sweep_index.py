"""Index over a dense beta grid, written as CSV (a thin wrapper over ``dfx sweep``)."""

import argparse
import math
import sys

from dfx.cli import main as dfx_main


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=100)
    ap.add_argument("--beta-min", type=float, default=0.55 * math.pi)
    ap.add_argument("--beta-max", type=float, default=6 * math.pi)
    ap.add_argument("--out", default="sweep.csv")
    args = ap.parse_args()
    return dfx_main([
        "sweep", "--steps", str(args.steps), "--beta-min", repr(args.beta_min),
        "--beta-max", repr(args.beta_max), "--out", args.out,
    ])


if __name__ == "__main__":
    sys.exit(main())
