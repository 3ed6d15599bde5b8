"""Run configuration: TOML parsing, canonical serialization, hashing.

The schema is a flat tree of sections with scalar or list-of-number leaves;
serialization is canonical (sorted keys, shortest-roundtrip floats) so a
config hashes and round-trips stably.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional, Tuple

try:
    import tomllib  # py >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

import numpy as np

from .geometry import (Euclidean, Hyperbolic, ModelManifold,
                       ProductS2R, Sphere)

TOOL_VERSION = "0.1.0"

DEFAULT_R_GRID = (0.30, 0.25, 0.20, 0.15, 0.10)


@dataclass(frozen=True)
class ManifoldSpec:
    kind: str = "euclidean"
    dim: int = 2
    radius: float = 1.0
    base_point: Optional[Tuple[float, ...]] = None

    def build(self) -> ModelManifold:
        if self.kind == "euclidean":
            return Euclidean(self.dim)
        if self.kind == "sphere":
            return Sphere(self.radius)
        if self.kind == "hyperbolic":
            return Hyperbolic(self.radius)
        if self.kind == "product_s2_r":
            return ProductS2R()
        raise ValueError(f"unknown manifold kind {self.kind!r}")

    def resolve_base_point(self, m: ModelManifold) -> np.ndarray:
        if self.base_point is None:
            return m.base_point()
        return np.asarray(self.base_point, dtype=float)


@dataclass(frozen=True)
class RunConfig:
    """Everything a CLI command needs, with documented defaults."""

    manifold: ManifoldSpec = field(default_factory=ManifoldSpec)
    r_grid: Tuple[float, ...] = DEFAULT_R_GRID
    v_grid: Tuple[float, ...] = (0.3, 0.2, 0.1, 0.05)
    mesh_level: int = 5
    fit_levels: Tuple[int, int] = (5, 6)
    calibrate: bool = False
    ellipsoid: bool = False
    seed: int = 0
    fourier_order: int = 4
    budget: int = 2000
    target_volume: float = float(np.pi)
    n_domains: int = 100
    max_amplitude: float = 0.2
    amplitudes: Tuple[float, ...] = (0.02, 0.04, 0.08, 0.16)
    tolerance: float = 0.15
    out_dir: str = "out"

    def to_toml(self) -> str:
        lines = ["[manifold]"]
        lines.append(f'kind = "{self.manifold.kind}"')
        lines.append(f"dim = {self.manifold.dim}")
        lines.append(f"radius = {_fmt(self.manifold.radius)}")
        if self.manifold.base_point is not None:
            lines.append("base_point = [" +
                         ", ".join(_fmt(x) for x in self.manifold.base_point) + "]")
        lines.append("")
        lines.append("[run]")
        for key in ("mesh_level", "seed", "fourier_order", "budget", "n_domains"):
            lines.append(f"{key} = {getattr(self, key)}")
        for key in ("calibrate", "ellipsoid"):
            lines.append(f"{key} = {'true' if getattr(self, key) else 'false'}")
        for key in ("target_volume", "max_amplitude", "tolerance"):
            lines.append(f"{key} = {_fmt(getattr(self, key))}")
        lines.append(f'out_dir = "{self.out_dir}"')
        lines.append(f"fit_levels = [{self.fit_levels[0]}, {self.fit_levels[1]}]")
        for key in ("r_grid", "v_grid", "amplitudes"):
            vals = ", ".join(_fmt(x) for x in getattr(self, key))
            lines.append(f"{key} = [{vals}]")
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_toml().encode()).hexdigest()[:16]


def _fmt(x: float) -> str:
    out = repr(float(x))
    return out


def parse_config_text(text: str) -> RunConfig:
    data = tomllib.loads(text)
    msec = data.get("manifold", {})
    base = msec.get("base_point")
    manifold = ManifoldSpec(
        kind=msec.get("kind", "euclidean"),
        dim=int(msec.get("dim", 2)),
        radius=float(msec.get("radius", 1.0)),
        base_point=tuple(float(x) for x in base) if base is not None else None,
    )
    rsec = data.get("run", {})
    defaults = RunConfig()

    def grab(key, cast, default):
        return cast(rsec[key]) if key in rsec else default

    return RunConfig(
        manifold=manifold,
        r_grid=grab("r_grid", lambda v: tuple(float(x) for x in v), defaults.r_grid),
        v_grid=grab("v_grid", lambda v: tuple(float(x) for x in v), defaults.v_grid),
        mesh_level=grab("mesh_level", int, defaults.mesh_level),
        fit_levels=grab("fit_levels", lambda v: (int(v[0]), int(v[1])), defaults.fit_levels),
        calibrate=grab("calibrate", bool, defaults.calibrate),
        ellipsoid=grab("ellipsoid", bool, defaults.ellipsoid),
        seed=grab("seed", int, defaults.seed),
        fourier_order=grab("fourier_order", int, defaults.fourier_order),
        budget=grab("budget", int, defaults.budget),
        target_volume=grab("target_volume", float, defaults.target_volume),
        n_domains=grab("n_domains", int, defaults.n_domains),
        max_amplitude=grab("max_amplitude", float, defaults.max_amplitude),
        amplitudes=grab("amplitudes", lambda v: tuple(float(x) for x in v),
                        defaults.amplitudes),
        tolerance=grab("tolerance", float, defaults.tolerance),
        out_dir=grab("out_dir", str, defaults.out_dir),
    )


def load_config(path) -> RunConfig:
    with open(path, "rb") as fh:
        return parse_config_text(fh.read().decode())
