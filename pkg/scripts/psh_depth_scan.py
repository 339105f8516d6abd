"""Smallest frame eigenvalue and largest discriminant per depth, for a fixed radial weight and several eta.

Shows where near the Levi-flat set the sampled check fails once eta passes the index.
"""

import argparse
import math

from dfx.domains import WormParams, worm_defining
from dfx.psh import PSH_DEPTHS, check_psh_grid, interior_sampler
from dfx.riccati import StrictMarginBuilder


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--beta", type=float, default=1.0, help="in units of pi")
    ap.add_argument("--weight-eta", type=float, default=0.45, help="eta the strict-margin weight is built for")
    ap.add_argument("--etas", type=float, nargs="*", default=(0.3, 0.45, 0.5, 0.55, 0.7))
    ap.add_argument("--grid", type=int, nargs=2, default=(32, 4))
    args = ap.parse_args()
    beta = args.beta * math.pi
    spec = worm_defining(WormParams(beta))
    psi = StrictMarginBuilder(beta)(args.weight_eta)
    print(f"weight {psi.name}, index {math.pi / (2 * beta):.4f}")
    print(f"{'eta':>6} {'depth':>8} {'min_eig':>11} {'max_delta':>11}")
    boundary = spec.sigma(*args.grid)
    for eta in args.etas:
        for t in PSH_DEPTHS:
            rep = check_psh_grid(spec, psi, eta, interior_sampler(spec, boundary, (t,)))
            print(f"{eta:6.3f} {t:8.0e} {rep.min_eigenvalue:11.3e} {rep.delta_max:11.3e}")


if __name__ == "__main__":
    main()
