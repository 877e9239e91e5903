"""Run every CLI subcommand with the default config and collect the verdicts.

    python3 scripts/run_all.py [--out results] [--quick] [--plot]
"""
import argparse
import sys

from parabolic_commutator.cli import run
from parabolic_commutator.config import SUBCOMMANDS


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--quick", action="store_true")
    ap.add_argument("--plot", action="store_true")
    args = ap.parse_args()
    codes = {sub: run(sub, out=args.out, quick=args.quick, plot=args.plot) for sub in SUBCOMMANDS}
    failed = [s for s, c in codes.items() if c != 0]
    print(f"{len(codes) - len(failed)}/{len(codes)} subcommands passed"
          + (f"; failed: {', '.join(failed)}" if failed else ""))
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
