"""Grid and step-size convergence of the Fourier-sample pipeline.

Prints the relative error of the dn_direct sample against the sampled
quadrature at xi = (pi, 0) under grid refinement, then the finite-difference
error of the first and second linearizations as eps shrinks.
"""

import argparse
import math

import numpy as np

from nlcalderon import (
    GridFunction,
    LinearizationRequest,
    SemilinearProblem,
    build_grid,
    linear_dn,
    mixed_fd_dn,
    mth_linearization_direct,
    recover_fourier_sample,
)
from nlcalderon.grid import smooth_random_boundary


def bump(X, Y):
    return np.exp(-50 * ((X - 0.5) ** 2 + (Y - 0.5) ** 2))


def grid_study(sizes):
    print("n      rel_error     ratio")
    prev = None
    for n in sizes:
        p = SemilinearProblem(GridFunction.from_function(build_grid(n, n), bump), 2)
        a = recover_fourier_sample(p, (math.pi, 0.0), "dn_direct").value
        b = recover_fourier_sample(p, (math.pi, 0.0), "quadrature_oracle").value
        err = abs(a - b) / abs(b)
        print(f"{n:<6} {err:.4e}    {'' if prev is None else f'{prev / err:.4f}'}")
        prev = err


def eps_study(n, seed):
    g = build_grid(n, n)
    p = SemilinearProblem(GridFunction.constant(g, 1.0), 2)
    rng = np.random.default_rng(seed)
    f1, f2 = smooth_random_boundary(g, rng), smooth_random_boundary(g, rng)
    ref1, ref2 = linear_dn(g, f1), mth_linearization_direct(p, [f1, f2])
    print("eps        k=1 rel_error   k=2 rel_error")
    for eps in (8e-3, 4e-3, 2e-3, 1e-3, 5e-4):
        e1 = (mixed_fd_dn(LinearizationRequest(p, [f1], eps)) - ref1).sup_norm() / ref1.sup_norm()
        e2 = (mixed_fd_dn(LinearizationRequest(p, [f1, f2], eps)) - ref2).sup_norm() / ref2.sup_norm()
        print(f"{eps:<10.1e} {e1:.4e}      {e2:.4e}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[17, 33, 65, 129])
    ap.add_argument("--n", type=int, default=33, help="grid size for the eps study")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    grid_study(args.sizes)
    print()
    eps_study(args.n, args.seed)


if __name__ == "__main__":
    main()
