"""g(lambda) for Z^3 over decades of lambda, with the optimal H and H*."""
import argparse
import logging
import math

from arw_lab.estimators import g_lambda
from arw_lab.greens import lattice_green_origin


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--tol", type=float, default=1e-3)
    ap.add_argument("--decades", type=int, default=3)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    og = lattice_green_origin(3, tol=args.tol)
    print(f"G(0,0) on Z^3: {og.value:.6f} (converged {og.converged})")
    for L, v in og.raw:
        print(f"  L={L:3d}  ball value {v:.6f}")
    print(f"{'lambda':>10} {'H*':>5} {'H_best':>7} {'g':>10} {'g/sqrt(lam)':>12}")
    for k in range(-args.decades, args.decades + 1):
        lam = 10.0**k
        rep = g_lambda(og.value, lam)
        print(f"{lam:10.3g} {rep.H_star:5d} {rep.H_best:7d} {rep.g_value:10.6f} {rep.g_value / math.sqrt(lam):12.4f}")


if __name__ == "__main__":
    main()
