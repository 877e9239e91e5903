"""Relative L2 gap between the lattice and rotation evaluations of C_A as the lattice refines.

    python3 scripts/rotations_refinement.py [--N 64] [--n-sigma 64] [--max-refine 4]
"""
import argparse

import numpy as np

from parabolic_commutator.experiments import rotations_vs_direct
from parabolic_commutator.grid import Field2D, TorusGrid
from parabolic_commutator.operators import CurveOpSpec, smooth_profile
from parabolic_commutator.symbols import make_symbol


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=64)
    ap.add_argument("--n-sigma", type=int, default=64)
    ap.add_argument("--max-refine", type=int, default=4)
    args = ap.parse_args()
    g = TorusGrid.square(args.N)
    f = Field2D.from_function(g, lambda x1, x2: np.cos(x1 + x2) + np.sin(2 * x2))
    spec = CurveOpSpec(epsilon=0.5, R=2.0, n_quad=16)
    refine = 1
    while refine <= args.max_refine:
        err = rotations_vs_direct(make_symbol("sine_x1"), f, smooth_profile(), spec,
                                  args.n_sigma, refine)
        print(f"refine {refine}: rel error {err:.3e}")
        refine *= 2


if __name__ == "__main__":
    main()
