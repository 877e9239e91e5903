"""Print the kernel regularity ratio int |K0(x+h,.) - K0(x,.)| / lam^(1/3) per symbol.

    python3 scripts/kernel_reg_table.py [--kmin 10] [--kmax 18] [--n-quad 64]
"""
import argparse

from parabolic_commutator.geometry import ParaPoint
from parabolic_commutator.regularity import gap, reg_integral_sweep
from parabolic_commutator.symbols import make_symbol

SYMBOLS = ("sine_x1", "sine_x2", "mixed", "random_bandlimited")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kmin", type=int, default=10)
    ap.add_argument("--kmax", type=int, default=18)
    ap.add_argument("--n-quad", type=int, default=64)
    args = ap.parse_args()
    lams = [2.0**-k for k in range(args.kmin, args.kmax + 1)]
    x = ParaPoint(0.3, -0.2)
    table = {n: reg_integral_sweep(make_symbol(n, seed=7) if n == "random_bandlimited"
                                   else make_symbol(n), x, lams, n_quad=args.n_quad)
             for n in SYMBOLS}
    print(f"{'k':>3} {'gap':>7} " + " ".join(f"{n:>19}" for n in SYMBOLS))
    for i, lam in enumerate(lams):
        print(f"{args.kmin + i:>3} {gap(lam):7.4f} "
              + " ".join(f"{table[n][i].ratio:19.6e}" for n in SYMBOLS))


if __name__ == "__main__":
    main()
