"""Excess-jump, upper and lower sleeping-probability checks on a (lambda, mu) grid."""
import argparse

from arw_lab.estimators import grid_checks
from arw_lab.graphs import LATTICE, make_region


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", default="2:4,3:3", help="dimension:radius pairs")
    ap.add_argument("--lambdas", default="0.1,1,10")
    ap.add_argument("--mus", default="0.2,0.5,1.0")
    ap.add_argument("--trials", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=5)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    print(f"{'region':>8} {'lam':>5} {'mu':>5} {'E[A]':>8} {'G':>7} {'Q':>7} {'g':>7} {'lower':>7}  z(A) z(Q) z(low)")
    for pair in args.dims.split(","):
        dim, L = (int(v) for v in pair.split(":"))
        region = make_region(LATTICE, dim, L)
        for lam in map(float, args.lambdas.split(",")):
            for mu in map(float, args.mus.split(",")):
                g = grid_checks(region, 0, mu, lam, args.trials, args.seed, threads=args.threads)
                print(f"Z^{dim} L={L} {lam:5g} {mu:5g} {g.excess.lhs:8.4f} {g.excess.rhs:7.4f} "
                      f"{g.theorem.lhs:7.4f} {g.theorem.rhs:7.4f} {g.lower.rhs:7.4f}  "
                      f"{g.excess.z:5.1f} {g.theorem.z:5.1f} {g.lower.z:5.1f}")


if __name__ == "__main__":
    main()
