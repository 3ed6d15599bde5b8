#!/usr/bin/env python3
"""Empirical small-volume profile of a catalog manifold against its
closed-form predictors."""

import argparse

from steklab import Euclidean, Hyperbolic, ProductS2R, Sphere
from steklab.profile import profile_scan

CATALOG = {
    "euclidean": lambda: Euclidean(2),
    "sphere": lambda: Sphere(1.0),
    "hyperbolic": lambda: Hyperbolic(1.0),
    "product_s2_r": lambda: ProductS2R(),
}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("manifold", choices=sorted(CATALOG))
    ap.add_argument("--volumes", type=float, nargs="+",
                    default=(0.3, 0.2, 0.1, 0.05))
    ap.add_argument("--level", type=int, default=5)
    args = ap.parse_args()

    m = CATALOG[args.manifold]()
    scan = profile_scan(m, m.base_point(), args.volumes, args.level)
    print(f"{'v':>8} {'nu2 ball':>12} {'nu2 ellips':>12} {'pred ball':>12} "
          f"{'pred ellips':>12} {'profile':>12}")
    for r in scan.rows:
        print(f"{r.v:>8.4f} {r.nu2_ball:>12.6f} {r.nu2_ellipsoid:>12.6f} "
              f"{r.predictor_ball:>12.6f} {r.predictor_ellipsoid:>12.6f} "
              f"{r.wb_prediction:>12.6f}")


if __name__ == "__main__":
    main()
