"""Volume trends of activity on the d-regular tree below and above lambda/(1+lambda)."""
import argparse

from arw_lab.estimators import activity_profile
from arw_lab.graphs import TREE


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--d", type=int, default=3)
    ap.add_argument("--lam", type=float, default=1.0)
    ap.add_argument("--mus", default="0.3,0.6,0.9")
    ap.add_argument("--L-list", default="3,5,7,9")
    ap.add_argument("--trials", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=9)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    Ls = [int(v) for v in args.L_list.split(",")]
    print(f"lambda/(1+lambda) = {args.lam / (1 + args.lam):.3f}")
    print(f"{'mu':>5} {'L':>3} {'|B_L|':>6} {'P(m(0)>=1)':>16} {'leaving':>18} {'sleeping':>18}")
    for mu in map(float, args.mus.split(",")):
        for r in activity_profile(TREE, args.d, args.lam, mu, Ls, args.trials, args.seed, threads=args.threads):
            print(f"{mu:5g} {r.L:3d} {r.n:6d} {r.visited.mean:8.4f}+-{r.visited.stderr:.4f} "
                  f"{r.leaving.mean:9.5f}+-{r.leaving.stderr:.5f} {r.sleeping.mean:9.5f}+-{r.sleeping.stderr:.5f}")


if __name__ == "__main__":
    main()
