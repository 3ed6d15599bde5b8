import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from steklab import cli
from steklab.config import ManifoldSpec, RunConfig, load_config, parse_config_text

DATA = Path(__file__).parent / "data"


def run_cli(args, **kw):
    return subprocess.run([sys.executable, "-m", "steklab.cli", *args],
                          capture_output=True, text=True, **kw)


class TestConfig:
    def test_round_trip_defaults(self):
        cfg = RunConfig()
        assert parse_config_text(cfg.to_toml()) == cfg

    def test_round_trip_custom(self):
        cfg = RunConfig(manifold=ManifoldSpec(kind="sphere", radius=2.0,
                                              base_point=(0.0, 0.0, 2.0)),
                        r_grid=(0.4, 0.3), mesh_level=3, fit_levels=(3, 4),
                        calibrate=True, seed=99, tolerance=0.05,
                        out_dir="elsewhere")
        assert parse_config_text(cfg.to_toml()) == cfg

    def test_hash_stable_and_sensitive(self):
        a = RunConfig()
        b = RunConfig(seed=1)
        assert a.config_hash() == RunConfig().config_hash()
        assert a.config_hash() != b.config_hash()

    def test_partial_file_uses_defaults(self, tmp_path):
        p = tmp_path / "c.toml"
        p.write_text("[manifold]\nkind = \"hyperbolic\"\n")
        cfg = load_config(p)
        assert cfg.manifold.kind == "hyperbolic"
        assert cfg.mesh_level == RunConfig().mesh_level

    def test_unknown_manifold_rejected_at_build(self):
        cfg = parse_config_text("[manifold]\nkind = \"torus\"\n")
        with pytest.raises(ValueError):
            cfg.manifold.build()


class TestCommands:
    def test_verify_disk_passes(self, tmp_path):
        cfg = RunConfig(mesh_level=4)
        assert cli.cmd_verify_disk(cfg, tmp_path)
        payload = json.loads((tmp_path / "verify-disk.json").read_text())
        assert payload["pass"] is True
        assert payload["command"] == "verify-disk"
        assert payload["config_hash"] == cfg.config_hash()
        assert payload["tool_version"] == "0.1.0"

    def test_fit_ball_euclid(self, tmp_path):
        cfg = RunConfig(manifold=ManifoldSpec(kind="euclidean", dim=2),
                        r_grid=(0.3, 0.25, 0.2), fit_levels=(3, 4),
                        tolerance=1e-3)
        assert cli.cmd_fit_ball(cfg, tmp_path)
        rows = (tmp_path / "fit-ball.csv").read_text().splitlines()
        assert rows[0].startswith("c_hat,")

    def test_fit_ball_failure_exit(self, tmp_path):
        # an impossible tolerance must breach (exit path 1)
        cfg = RunConfig(manifold=ManifoldSpec(kind="sphere"),
                        r_grid=(0.3, 0.25, 0.2), fit_levels=(3, 4),
                        tolerance=1e-9)
        assert not cli.cmd_fit_ball(cfg, tmp_path)

    def test_fit_ellipsoid_euclid(self, tmp_path):
        cfg = RunConfig(manifold=ManifoldSpec(kind="euclidean", dim=2),
                        r_grid=(0.3, 0.25, 0.2), fit_levels=(3, 4),
                        tolerance=1e-3)
        assert cli.cmd_fit_ellipsoid(cfg, tmp_path)
        payload = json.loads((tmp_path / "fit-ellipsoid.json").read_text())
        assert payload["rows"][0]["target"] == 0.0

    def test_profile_scan_golden_euclid(self, tmp_path):
        cfg = RunConfig(manifold=ManifoldSpec(kind="euclidean", dim=2),
                        v_grid=(0.4, 0.2, 0.1), mesh_level=4)
        assert cli.cmd_profile_scan(cfg, tmp_path)
        got = (tmp_path / "profile-scan.csv").read_bytes()
        golden = (DATA / "golden_euclid_scan.csv").read_bytes()
        assert got == golden

    def test_compare_report(self, tmp_path):
        cfg_a = RunConfig(manifold=ManifoldSpec(kind="hyperbolic"),
                          v_grid=(0.2, 0.1), mesh_level=3)
        cfg_b = RunConfig(manifold=ManifoldSpec(kind="sphere"),
                          v_grid=(0.2, 0.1), mesh_level=3)
        assert cli.cmd_compare(cfg_a, cfg_b, tmp_path)
        payload = json.loads((tmp_path / "compare.json").read_text())
        assert all(r["predictor_strict"] for r in payload["rows"])

    def test_export_mesh(self, tmp_path):
        cfg = RunConfig()
        assert cli.cmd_export_mesh(cfg, tmp_path, dim=2, level=2)
        text = (tmp_path / "unit_ball_d2_l2.txt").read_text()
        assert text.splitlines()[0].startswith("# steklab mesh dim=2 level=2")

    def test_isoperimetric_small(self, tmp_path):
        cfg = RunConfig(n_domains=6, seed=4, mesh_level=3)
        ok = cli.cmd_isoperimetric(cfg, tmp_path)
        payload = json.loads((tmp_path / "isoperimetric.json").read_text())
        assert len(payload["rows"]) == 6
        assert ok


class TestExitCodes:
    def test_missing_config_is_usage_error(self):
        r = run_cli(["fit-ball", "--config", "/definitely/not/here.toml"])
        assert r.returncode == 2

    def test_unknown_command_is_usage_error(self):
        r = run_cli(["frobnicate"])
        assert r.returncode == 2

    def test_verify_disk_headless(self, tmp_path):
        r = run_cli(["verify-disk", "--level", "4", "--out", str(tmp_path)])
        assert r.returncode == 0

    def test_tolerance_breach_exit_one(self, tmp_path):
        cfgfile = tmp_path / "c.toml"
        cfgfile.write_text(
            '[manifold]\nkind = "sphere"\n\n[run]\n'
            'r_grid = [0.3, 0.25, 0.2]\nfit_levels = [3, 4]\ntolerance = 1e-9\n')
        r = run_cli(["fit-ball", "--config", str(cfgfile), "--out", str(tmp_path)])
        assert r.returncode == 1


class TestThreadCapAndStrict:
    def test_steklov_threads_env(self, tmp_path):
        import os
        cfgfile = tmp_path / "c.toml"
        cfgfile.write_text('[manifold]\nkind = "euclidean"\n\n[run]\n'
                           "n_domains = 4\nseed = 11\n")
        env = dict(os.environ, STEKLOV_THREADS="3")
        r = subprocess.run([sys.executable, "-m", "steklab.cli", "isoperimetric",
                            "--config", str(cfgfile), "--out", str(tmp_path / "p")],
                           capture_output=True, text=True, env=env)
        assert r.returncode == 0
        # threaded output matches the serial run byte for byte
        r2 = run_cli(["isoperimetric", "--config", str(cfgfile),
                      "--out", str(tmp_path / "s")])
        assert r2.returncode == 0
        assert (tmp_path / "p" / "isoperimetric.csv").read_bytes() == \
            (tmp_path / "s" / "isoperimetric.csv").read_bytes()

    def test_strict_gates_compare(self, tmp_path):
        cfg_a = RunConfig(manifold=ManifoldSpec(kind="hyperbolic"),
                          v_grid=(0.2,), mesh_level=3)
        cfg_b = RunConfig(manifold=ManifoldSpec(kind="sphere"),
                          v_grid=(0.2,), mesh_level=3)
        assert cli.cmd_compare(cfg_a, cfg_b, tmp_path, strict=True)


class TestDeterminism:
    def test_profile_scan_byte_identical(self, tmp_path):
        cfg = RunConfig(manifold=ManifoldSpec(kind="euclidean", dim=2),
                        v_grid=(0.3, 0.15), mesh_level=3)
        cli.cmd_profile_scan(cfg, tmp_path / "a")
        cli.cmd_profile_scan(cfg, tmp_path / "b")
        assert (tmp_path / "a" / "profile-scan.csv").read_bytes() == \
            (tmp_path / "b" / "profile-scan.csv").read_bytes()
        assert (tmp_path / "a" / "profile-scan.json").read_bytes() == \
            (tmp_path / "b" / "profile-scan.json").read_bytes()
