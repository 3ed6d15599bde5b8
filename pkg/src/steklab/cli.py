"""Command-line frontend: reproducible reports for every verification run.

Each subcommand writes ``<out>/<command>.csv`` (plot-ready table),
``<command>.json`` ({command, config_hash, tool_version, rows, pass}) and
``<command>.txt`` (pass/fail summary).  Exit codes: 0 pass, 1 tolerance
breach, 2 usage error, 3 numeric failure.  ``STEKLOV_THREADS`` caps sweep
parallelism.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import expansions, profile
from .config import RunConfig, TOOL_VERSION, load_config
from .domains import deficit_slope
from .geometry import NumericError, identity_chart, curvature_at
from .meshing import export_mesh, unit_ball_mesh
from .steklov import assemble, solve_steklov


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, float) or isinstance(x, np.floating):
        return repr(float(x))
    return str(x)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_report(out_dir: Path, command: str, cfg: RunConfig, header, rows,
                 passed: bool, summary_lines) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(out_dir / f"{command}.csv", header, rows)
    payload = {
        "command": command,
        "config_hash": cfg.config_hash(),
        "tool_version": TOOL_VERSION,
        "rows": [dict(zip(header, [_json_value(v) for v in row])) for row in rows],
        "pass": bool(passed),
    }
    with open(out_dir / f"{command}.json", "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")
    with open(out_dir / f"{command}.txt", "w") as fh:
        fh.write(f"{command}  [config {cfg.config_hash()}; steklab {TOOL_VERSION}]\n")
        for line in summary_lines:
            fh.write(line + "\n")
        fh.write(("PASS" if passed else "FAIL") + "\n")


def _json_value(v):
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer, int)):
        return int(v)
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    return v


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_verify_disk(cfg: RunConfig, out_dir: Path) -> bool:
    """Flat unit-disk oracle: spectrum (0, 1, 1, 2, 2), null first mode,
    inverse-sum equality."""
    chart = identity_chart(2)
    lo = max(cfg.mesh_level - 1, 3)
    ev_lo = solve_steklov(assemble(unit_ball_mesh(2, lo), chart), 5).eigenvalues
    ev_hi = solve_steklov(assemble(unit_ball_mesh(2, lo + 1), chart), 5).eigenvalues
    rich = np.array([profile.richardson_extrapolate(a, b)
                     for a, b in zip(ev_lo, ev_hi)])
    target = np.array([0.0, 1.0, 1.0, 2.0, 2.0])
    checks = [
        ("nu1 null", abs(rich[0]) <= 1e-8),
        ("nu2 unit", abs(rich[1] - 1.0) <= 1e-3),
        ("nu3 unit", abs(rich[2] - 1.0) <= 1e-3),
        ("nu4 double", abs(rich[3] - 2.0) <= 0.01),
        ("nu5 double", abs(rich[4] - 2.0) <= 0.01),
    ]
    total, ok = expansions.brock_sum_bound(rich[1:3], tolerance=0.01)
    checks.append(("inverse-sum equality", abs(total - 2.0) <= 0.01))
    header = ["index", "computed", "target", "abs_error"]
    rows = [(i + 1, rich[i], target[i], abs(rich[i] - target[i])) for i in range(5)]
    passed = all(c[1] for c in checks)
    lines = [f"levels ({lo}, {lo + 1}) Richardson"]
    lines += [f"{'ok ' if c[1] else 'BAD'} {c[0]}" for c in checks]
    lines.append(f"inverse-sum = {total!r}")
    write_report(out_dir, "verify-disk", cfg, header, rows, passed, lines)
    return passed


def _fit_target(cfg: RunConfig, m, y0) -> float:
    cp = curvature_at(m, y0)
    N = m.dim
    if cfg.ellipsoid:
        return 2.0 * cp.scalar / (3.0 * N * (N + 2))
    return 2.0 * cp.ricci_min / (3.0 * (N + 2))


def cmd_fit_ball(cfg: RunConfig, out_dir: Path, command="fit-ball") -> bool:
    m = cfg.manifold.build()
    y0 = cfg.manifold.resolve_base_point(m)
    fit = profile.fit_ball_coefficient(m, y0, cfg.r_grid, cfg.fit_levels,
                                       calibrate=cfg.calibrate,
                                       ellipsoid=cfg.ellipsoid)
    target = _fit_target(cfg, m, y0)
    if target != 0.0:
        rel = abs(fit.c_hat - target) / abs(target)
        passed = rel <= cfg.tolerance
    else:
        rel = abs(fit.c_hat)
        passed = rel <= cfg.tolerance
    header = ["c_hat", "stderr", "target", "rel_error", "levels_lo", "levels_hi"]
    rows = [(fit.c_hat, fit.stderr, target, rel, cfg.fit_levels[0], cfg.fit_levels[1])]
    lines = [f"manifold {cfg.manifold.kind}; {fit.note}",
             f"c_hat = {fit.c_hat!r} target = {target!r} rel_error = {rel!r}"]
    write_report(out_dir, command, cfg, header, rows, passed, lines)
    return passed


def cmd_fit_ellipsoid(cfg: RunConfig, out_dir: Path) -> bool:
    cfg = _replace(cfg, ellipsoid=True)
    return cmd_fit_ball(cfg, out_dir, command="fit-ellipsoid")


def _replace(cfg: RunConfig, **kw) -> RunConfig:
    from dataclasses import replace
    return replace(cfg, **kw)


def cmd_profile_scan(cfg: RunConfig, out_dir: Path, strict=False) -> bool:
    m = cfg.manifold.build()
    y0 = cfg.manifold.resolve_base_point(m)
    scan = profile.profile_scan(m, y0, cfg.v_grid, cfg.mesh_level)
    header = ["v", "nu2_ball", "nu2_ellipsoid", "predictor_ball",
              "predictor_ellipsoid", "wb_prediction", "margin"]
    rows = []
    ok_all = True
    order_ok = True
    for r in scan.rows:
        margin = r.nu2_ball - r.wb_prediction
        ok = (r.nu2_ball > 0) and (margin >= -cfg.tolerance)
        ok_all = ok_all and ok
        order_ok = order_ok and (r.nu2_ball <= r.nu2_ellipsoid + cfg.tolerance)
        rows.append((r.v, r.nu2_ball, r.nu2_ellipsoid, r.predictor_ball,
                     r.predictor_ellipsoid, r.wb_prediction, margin))
    vs = [r.v for r in scan.rows]
    monotone = all(a > b for a, b in zip(vs, vs[1:]))
    passed = ok_all and monotone and (order_ok or not strict)
    lines = [f"manifold {cfg.manifold.kind} level {cfg.mesh_level}",
             f"{'ok ' if monotone else 'BAD'} volumes strictly decreasing",
             f"{'ok ' if ok_all else 'BAD'} computed nu2 above profile predictor "
             f"- {cfg.tolerance!r}",
             f"{'ok ' if order_ok else 'BAD'} ellipsoid column dominates ball "
             f"({'gates pass' if strict else 'advisory'})"]
    write_report(out_dir, "profile-scan", cfg, header, rows, passed, lines)
    return passed


def cmd_shape_search(cfg: RunConfig, out_dir: Path) -> bool:
    chart = identity_chart(2) if cfg.manifold.kind == "euclidean" else None
    if chart is None:
        m = cfg.manifold.build()
        y0 = cfg.manifold.resolve_base_point(m)
        from .geometry import pullback_ball_chart
        from .domains import matched_radius
        rho = matched_radius(m, y0, cfg.target_volume)
        chart = pullback_ball_chart(m, y0, rho)
        target_volume = cfg.target_volume / rho**2
    else:
        target_volume = cfg.target_volume
    res = profile.shape_search(chart, target_volume, cfg.fourier_order,
                               cfg.budget, seed=cfg.seed,
                               mesh_level=min(cfg.mesh_level, 3))
    amp = res.best_star.total_amplitude()
    header = ["best_nu2", "total_amplitude", "evaluations", "converged"]
    rows = [(res.best_nu2, amp, res.evaluations, res.converged)]
    passed = bool(res.best_nu2 <= 1.005 and amp <= 0.05) \
        if cfg.manifold.kind == "euclidean" else True
    lines = [f"best nu2 = {res.best_nu2!r} amplitude = {amp!r} "
             f"evals = {res.evaluations} converged = {res.converged}"]
    write_report(out_dir, "shape-search", cfg, header, rows, passed, lines)
    return passed


def cmd_isoperimetric(cfg: RunConfig, out_dir: Path, max_workers=1) -> bool:
    """Random star sweep: inverse-sum bound rows plus deficit/excess columns
    and their log-log slope."""
    rows_data = profile.brock_star_sweep(cfg.seed, cfg.n_domains,
                                         cfg.max_amplitude,
                                         max_workers=max_workers)
    header = ["index", "total_amplitude", "nu2", "nu3", "inv_sum", "gap",
              "deficit", "moment_excess"]
    rows = [(r.index, r.total_amplitude, r.nu2, r.nu3, r.inv_sum, r.gap,
             r.deficit, r.moment_excess) for r in rows_data]
    bound_ok = all(r.inv_sum >= 2.0 - 1e-3 for r in rows_data)
    gap_ok = all(r.total_amplitude < 0.02 for r in rows_data if r.gap < 1e-3)
    excess_ok = all(r.moment_excess >= -1e-9 for r in rows_data)
    from .domains import DeficitRow
    slope = deficit_slope([DeficitRow(r.total_amplitude, r.deficit, r.moment_excess)
                           for r in rows_data])
    slope_ok = abs(slope - 2.0) <= 0.3
    passed = bound_ok and gap_ok and excess_ok and slope_ok
    lines = [
        f"{'ok ' if bound_ok else 'BAD'} inverse-sum >= 2 - 1e-3 on all "
        f"{len(rows)} domains",
        f"{'ok ' if gap_ok else 'BAD'} near-equality only below amplitude 0.02",
        f"{'ok ' if excess_ok else 'BAD'} moment excess >= -1e-9",
        f"{'ok ' if slope_ok else 'BAD'} excess-vs-deficit slope {slope!r} in 2 +/- 0.3",
    ]
    write_report(out_dir, "isoperimetric", cfg, header, rows, passed, lines)
    return passed


def cmd_compare(cfg_a: RunConfig, cfg_b: RunConfig, out_dir: Path,
                strict=False) -> bool:
    ma = cfg_a.manifold.build()
    mb = cfg_b.manifold.build()
    ya = cfg_a.manifold.resolve_base_point(ma)
    yb = cfg_b.manifold.resolve_base_point(mb)
    report = expansions.compare_profiles(ma, ya, mb, yb, cfg_a.v_grid,
                                         mesh_level=cfg_a.mesh_level)
    header = ["v", "predictor_a", "predictor_b", "nu2_a", "nu2_b",
              "predictor_strict", "computed_matches"]
    rows = [(r.v, r.predictor_a, r.predictor_b,
             r.nu2_a if r.nu2_a is not None else float("nan"),
             r.nu2_b if r.nu2_b is not None else float("nan"),
             r.predictor_strict, bool(r.computed_matches))
            for r in report.rows]
    computed_ok = all(r.computed_matches for r in report.rows)
    passed = report.predictor_ordering_all and (computed_ok or not strict)
    lines = [f"scalar curvatures: {report.scalar_a!r} vs {report.scalar_b!r}",
             f"{'ok ' if report.predictor_ordering_all else 'BAD'} predictor "
             "ordering on the whole grid",
             f"{'ok ' if computed_ok else 'BAD'} computed ordering agreement "
             f"({'gates pass' if strict else 'advisory'}); "
             f"agrees up to v = {report.matched_v_max!r}"]
    write_report(out_dir, "compare", cfg_a, header, rows, passed, lines)
    return passed


def cmd_export_mesh(cfg: RunConfig, out_dir: Path, dim: int, level: int) -> bool:
    mesh = unit_ball_mesh(dim, level)
    out_dir.mkdir(parents=True, exist_ok=True)
    export_mesh(mesh, out_dir / f"unit_ball_d{dim}_l{level}.txt")
    return True


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="steklov-lab",
                                description=__doc__.splitlines()[0])
    p.add_argument("command", choices=[
        "verify-disk", "fit-ball", "fit-ellipsoid", "profile-scan",
        "shape-search", "isoperimetric", "compare", "export-mesh"])
    p.add_argument("--config", type=str, default=None, help="TOML config path")
    p.add_argument("--config-b", type=str, default=None,
                   help="second config for `compare`")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--level", type=int, default=None, help="override mesh level")
    p.add_argument("--out", type=str, default=None, help="output directory")
    p.add_argument("--dim", type=int, default=2, help="mesh dimension for export-mesh")
    p.add_argument("--strict", action="store_true",
                   help="escalate advisory breaches to exit code 1")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0

    try:
        cfg = load_config(args.config) if args.config else RunConfig()
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.seed is not None:
        cfg = _replace(cfg, seed=args.seed)
    if args.level is not None:
        cfg = _replace(cfg, mesh_level=args.level)
    out_dir = Path(args.out if args.out else cfg.out_dir)
    max_workers = max(1, int(os.environ.get("STEKLOV_THREADS", "1")))

    try:
        if args.command == "verify-disk":
            passed = cmd_verify_disk(cfg, out_dir)
        elif args.command == "fit-ball":
            passed = cmd_fit_ball(cfg, out_dir)
        elif args.command == "fit-ellipsoid":
            passed = cmd_fit_ellipsoid(cfg, out_dir)
        elif args.command == "profile-scan":
            passed = cmd_profile_scan(cfg, out_dir, strict=args.strict)
        elif args.command == "shape-search":
            passed = cmd_shape_search(cfg, out_dir)
        elif args.command == "isoperimetric":
            passed = cmd_isoperimetric(cfg, out_dir, max_workers=max_workers)
        elif args.command == "compare":
            if not args.config_b:
                print("compare needs --config-b", file=sys.stderr)
                return 2
            try:
                cfg_b = load_config(args.config_b)
            except (OSError, ValueError) as exc:
                print(f"config error: {exc}", file=sys.stderr)
                return 2
            passed = cmd_compare(cfg, cfg_b, out_dir, strict=args.strict)
        elif args.command == "export-mesh":
            passed = cmd_export_mesh(cfg, out_dir, args.dim,
                                     args.level if args.level is not None
                                     else cfg.mesh_level)
        else:  # pragma: no cover
            return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2

    return 0 if passed else 1


if __name__ == "__main__":
    sys.exit(main())
