"""Outer-ring and inner-ball Green's sums on Z^3 and the 3-regular tree."""
import argparse

from arw_lab.graphs import LATTICE, TREE, make_region
from arw_lab.greens import escape_probability, green_exact, ring_green_sum


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--delta", type=float, default=0.25)
    ap.add_argument("--lattice-L", default="8,12,16,24")
    ap.add_argument("--tree-L", default="6,8,10,12")
    args = ap.parse_args()

    q = 1 - args.delta
    print(f"{'graph':>8} {'L':>3} {'n':>6} {'outer':>9} {'outer/L':>8} {'outer/L^2':>9} {'inner':>9} {'(1-d)L p G':>10}")
    for family, d, Ls in ((LATTICE, 3, args.lattice_L), (TREE, 3, args.tree_L)):
        for L in map(int, Ls.split(",")):
            r = make_region(family, d, L)
            outer = ring_green_sum(r, q * L, L)
            inner = ring_green_sum(r, 0, q * L)
            rhs = escape_probability(r) * green_exact(r, None, 0, 0) * q * L
            print(f"{family:>8} {L:3d} {r.n:6d} {outer:9.4f} {outer / L:8.4f} {outer / L**2:9.5f} {inner:9.4f} {rhs:10.4f}")


if __name__ == "__main__":
    main()
