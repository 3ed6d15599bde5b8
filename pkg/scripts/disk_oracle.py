#!/usr/bin/env python3
"""Convergence table for the flat unit disk against the separation-of-variables
spectrum (0, 1, 1, 2, 2, ...)."""

import argparse

import numpy as np

from steklab import identity_chart, unit_ball_mesh, assemble, solve_steklov
from steklab.profile import richardson_extrapolate


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--max-level", type=int, default=6)
    ap.add_argument("--k", type=int, default=7)
    args = ap.parse_args()

    chart = identity_chart(2)
    exact = np.array([0.0] + [1 + (j - 1) // 2 for j in range(1, args.k)], dtype=float)
    prev = None
    print(f"{'level':>5} {'nu2':>12} {'nu4':>12} {'max |err|':>12} {'rate':>6}")
    prev_err = None
    for level in range(2, args.max_level + 1):
        ev = solve_steklov(assemble(unit_ball_mesh(2, level), chart), args.k).eigenvalues
        err = np.max(np.abs(ev - exact))
        rate = np.log2(prev_err / err) if prev_err else float("nan")
        print(f"{level:>5} {ev[1]:>12.8f} {ev[3]:>12.8f} {err:>12.3e} {rate:>6.2f}")
        prev_err = err
        if prev is not None:
            rich = np.array([richardson_extrapolate(a, b) for a, b in zip(prev, ev)])
            print(f"{'rich':>5} {rich[1]:>12.8f} {rich[3]:>12.8f} "
                  f"{np.max(np.abs(rich - exact)):>12.3e}")
        prev = ev


if __name__ == "__main__":
    main()
