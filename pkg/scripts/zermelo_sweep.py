#!/usr/bin/env python3
"""Sweep the control bound on a fixed navigation instance.

For a fixed drift and target, solves the time-optimal problem across a range
of control bounds with both the closed-form navigation solver and the
shooting solver, writing one CSV row per bound.  The optimal time must be
non-increasing in the bound and the two solvers must agree.

Usage: python scripts/zermelo_sweep.py [--omega0 0.3] [--points 7]
                                       [--seed 0] [--out sweep.csv]
"""

import argparse
import sys

import numpy as np

from toqc import (
    ConstraintSet,
    ShootingOptions,
    ShootingProblem,
    Typical,
    solve_shooting,
    zermelo_solve,
)
from toqc.sun_algebra import SIGMA_Z, generalized_gellmann, random_special_unitary


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--omega0", type=float, default=0.3)
    ap.add_argument("--points", type=int, default=7)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="zermelo_sweep.csv")
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    drift = args.omega0 * SIGMA_Z
    target = random_special_unitary(rng, 2)
    bounds = np.linspace(0.6, 2.0, args.points)

    rows = ["omega,T_navigation,T_shooting,rel_dT,residual_shooting"]
    prev_t = np.inf
    for bound in bounds:
        z = zermelo_solve(drift, bound, target)
        c = ConstraintSet(2, drift, tuple(generalized_gellmann(2)),
                          Typical(bound))
        s = solve_shooting(ShootingProblem(c, target, ShootingOptions(
            grid_points=96, multistarts=24, seed=args.seed,
            stop_after_converged=3, refine_points=8192)))
        rel = abs(z.T - s.T) / z.T
        rows.append(f"{bound:.6f},{z.T:.12f},{s.T:.12f},{rel:.3e},"
                    f"{s.residual:.3e}")
        print(rows[-1])
        if z.T > prev_t + 1e-9:
            print(f"warning: T increased at omega={bound}", file=sys.stderr)
        prev_t = z.T

    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("\n".join(rows) + "\n")
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
