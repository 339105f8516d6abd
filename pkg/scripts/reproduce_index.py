"""Index of the beta-worm from Riccati blow-up bisection, against pi/(2 beta)."""

import argparse
import math
import time

from dfx.criterion import eta_from_alpha
from dfx.riccati import max_alpha

BETAS = (0.6, 0.75, 1.0, 1.5, 2.0, 4.0)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--tol", type=float, default=1e-9)
    ap.add_argument("--betas", type=float, nargs="*", default=BETAS, help="beta in units of pi")
    args = ap.parse_args()
    print(f"{'beta/pi':>8} {'alpha_max':>14} {'index':>14} {'pi/(2beta)':>14} {'abs_err':>9} {'sec':>6}")
    for b in args.betas:
        beta = b * math.pi
        t = time.perf_counter()
        a = max_alpha(beta, args.tol)
        dt = time.perf_counter() - t
        idx, pred = eta_from_alpha(a), math.pi / (2 * beta)
        print(f"{b:8.3f} {a:14.10f} {idx:14.10f} {pred:14.10f} {abs(idx - pred):9.1e} {dt:6.3f}")


if __name__ == "__main__":
    main()
