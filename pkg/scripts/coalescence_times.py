"""Forward coupling times of the extreme Glauber chains, in units of n^2 checkerboard sweeps.

Used to justify the default Glauber budget of 4 n^2 sweeps.
    python3 scripts/coalescence_times.py --sizes 8 16 32 64 --count 256
"""

import argparse

import numpy as np

from asmgue.sample import default_sweeps, forward_coupling_sweeps


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--sizes", type=int, nargs="+", default=[8, 16, 32, 64])
    ap.add_argument("--count", type=int, default=256)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    print(f"{'n':>4} {'median':>8} {'q99':>8} {'max':>8} {'budget':>8}   (units of n^2 sweeps)")
    for n in args.sizes:
        t = forward_coupling_sweeps(n, args.count, args.seed + n) / (n * n)
        print(f"{n:>4} {np.median(t):8.2f} {np.quantile(t, 0.99):8.2f} {t.max():8.2f} {default_sweeps(n) / (n * n):8.2f}")


if __name__ == "__main__":
    main()
