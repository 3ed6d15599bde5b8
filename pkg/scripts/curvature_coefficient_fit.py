#!/usr/bin/env python3
"""Recover the first-order curvature coefficients of the small-ball eigenvalue
from full FEM runs, on the unit sphere and the hyperbolic plane.

Targets: the radius-form coefficient 2 R_min / (3 (N+2)) = 1/6 and -1/6, and
the volume-form coefficient S/16 = +/- 0.125.
"""

import argparse

from steklab import Hyperbolic, Sphere
from steklab.profile import fit_ball_coefficient, fit_volume_coefficient

R_GRID = (0.30, 0.25, 0.20, 0.15, 0.10)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--levels", type=int, nargs=2, default=(5, 6))
    ap.add_argument("--grid", type=float, nargs="+", default=R_GRID)
    args = ap.parse_args()
    levels = tuple(args.levels)

    for m, c_target, v_target in ((Sphere(1.0), 1 / 6, 0.125),
                                  (Hyperbolic(1.0), -1 / 6, -0.125)):
        y0 = m.base_point()
        fit = fit_ball_coefficient(m, y0, args.grid, levels)
        vfit = fit_volume_coefficient(m, y0, args.grid, levels)
        print(f"{m.kind:>11}: c_hat = {fit.c_hat:+.6f} (target {c_target:+.6f}, "
              f"err {abs(fit.c_hat - c_target) / abs(c_target):.2%}, "
              f"stderr {fit.stderr:.1e})")
        print(f"{'':>11}  volume-form = {vfit.c_hat:+.6f} (target {v_target:+.6f}, "
              f"err {abs(vfit.c_hat - v_target) / abs(v_target):.2%})")


if __name__ == "__main__":
    main()
