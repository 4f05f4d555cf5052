"""Experiment configuration: YAML file -> validated dataclasses.

Unknown keys anywhere are errors.  All parameters are checked against the
module preconditions before any solve runs.
"""

from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError, GridError
from .grid import BoundaryFunction, Grid, GridFunction, build_grid, smooth_random_boundary
from .linearization import MIN_STEP_POWER
from .reconstruction import FreqLattice

POTENTIAL_KINDS = {
    "constant": {"value"},
    "bump": {"amplitude", "center", "sharpness"},
    "cosine": {"amplitude", "wavevector"},
    "file": {"path"},
}
BOUNDARY_KINDS = {
    "constant": {"value"},
    "linear": {"a", "b", "c"},
    "random": {"amplitude", "modes"},
    "file": {"path"},
}


@dataclass
class GridConfig:
    nx: int = 33
    ny: int = 33
    rect: tuple = (0.0, 0.0, 1.0, 1.0)  # x0, y0, width, height


@dataclass
class PotentialConfig:
    kind: str = "constant"
    params: dict = field(default_factory=dict)


@dataclass
class BoundaryConfig:
    kind: str = "constant"
    params: dict = field(default_factory=lambda: {"value": 0.01})


@dataclass
class SolverConfig:
    tol: float = 1e-12
    max_iter: int = 50


@dataclass
class LinearizationConfig:
    eps: float = 1e-3
    method: str = "dn_direct"


@dataclass
class LatticeConfig:
    L_box: float | None = None
    radius: float = 4 * math.pi


@dataclass
class VerifyConfig:
    n_tuples: int = 5
    gauge_samples: int = 10
    gauge_amplitude: float = 0.01
    completeness_n: int = 12
    completeness_m: int = 4
    oversample: int = 5


@dataclass
class ProbeConfig:
    amplitude: float = 0.1
    frequencies: tuple = (1, 2, 4, 8)
    scales: tuple = (1.0, 0.5, 0.25)


@dataclass
class ExperimentConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    potential: PotentialConfig = field(default_factory=PotentialConfig)
    m: int = 2
    solver: SolverConfig = field(default_factory=SolverConfig)
    linearization: LinearizationConfig = field(default_factory=LinearizationConfig)
    lattice: LatticeConfig = field(default_factory=LatticeConfig)
    boundary: BoundaryConfig = field(default_factory=BoundaryConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    probe: ProbeConfig = field(default_factory=ProbeConfig)
    seed: int = 0
    workers: int = 1
    output_dir: str = "out"
    base_dir: Path = field(default=Path("."), repr=False, compare=False)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("base_dir")
        return _plain(d)

    # -- derived objects -------------------------------------------------

    def build_grid(self) -> Grid:
        g = self.grid
        return build_grid(g.nx, g.ny, g.rect)

    def resolve(self, path) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p

    def input_files(self) -> list:
        out = []
        for section in (self.potential, self.boundary):
            if section.kind == "file":
                out.append(self.resolve(section.params["path"]))
        return out

    def build_potential(self, grid: Grid) -> GridFunction:
        kind, prm = self.potential.kind, self.potential.params
        if kind == "constant":
            return GridFunction.constant(grid, float(prm.get("value", 1.0)))
        if kind == "bump":
            cx, cy = prm.get("center", tuple(grid.center))
            a = float(prm.get("amplitude", 1.0))
            s = float(prm.get("sharpness", 50.0))
            return GridFunction.from_function(
                grid, lambda X, Y: a * np.exp(-s * ((X - cx) ** 2 + (Y - cy) ** 2))
            )
        if kind == "cosine":
            a = float(prm.get("amplitude", 1.0))
            kx, ky = (parse_number(v) for v in prm.get("wavevector", (2 * math.pi, 0.0)))
            return GridFunction.from_function(grid, lambda X, Y: a * np.cos(kx * X + ky * Y))
        q = GridFunction.from_csv(self.resolve(prm["path"]), grid)
        if np.iscomplexobj(q.values):
            if np.any(q.values.imag != 0):
                raise ConfigError("potential file has a nonzero imaginary part")
            q = q.real
        return q

    def build_boundary(self, grid: Grid) -> BoundaryFunction:
        kind, prm = self.boundary.kind, self.boundary.params
        if kind == "constant":
            return BoundaryFunction.constant(grid, float(prm.get("value", 0.01)))
        if kind == "linear":
            a, b, c = (float(prm.get(k, 0.0)) for k in ("a", "b", "c"))
            return BoundaryFunction.from_function(grid, lambda x, y: a + b * x + c * y)
        if kind == "random":
            rng = np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(1,)))
            f = smooth_random_boundary(grid, rng, int(prm.get("modes", 4)))
            return f * float(prm.get("amplitude", 0.01))
        f = BoundaryFunction.from_csv(self.resolve(prm["path"]), grid)
        if np.iscomplexobj(f.values):
            raise ConfigError("boundary data file must be real")
        return f

    def build_lattice(self, grid: Grid) -> FreqLattice:
        L = self.lattice.L_box
        return FreqLattice(max(grid.lx, grid.ly) if L is None else L, self.lattice.radius)


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


_PI = re.compile(r"^\s*([-+]?[0-9.eE+-]*)\s*\*?\s*pi\s*$")


def parse_number(v) -> float:
    """Accept plain numbers and strings such as ``"4pi"``, ``"4*pi"`` or ``"pi"``."""
    if isinstance(v, bool):
        raise ConfigError(f"expected a number, got {v!r}")
    if isinstance(v, (int, float)):
        return float(v)
    if isinstance(v, str):
        m = _PI.match(v)
        if m:
            c = m.group(1)
            return (float(c) if c not in ("", "+", "-") else float(c + "1")) * math.pi
        try:
            return float(v)
        except ValueError:
            pass
    raise ConfigError(f"expected a number, got {v!r}")


def _check_keys(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected a mapping")
    unknown = set(d) - set(allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")


def _int(v, where, lo=None):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
        raise ConfigError(f"{where}: expected an integer, got {v!r}")
    v = int(v)
    if lo is not None and v < lo:
        raise ConfigError(f"{where}: must be >= {lo}, got {v}")
    return v


def _pos(v, where):
    x = parse_number(v)
    if not (x > 0 and math.isfinite(x)):
        raise ConfigError(f"{where}: must be positive, got {v!r}")
    return x


def _rect(v, where):
    if not isinstance(v, (list, tuple)) or len(v) != 4:
        raise ConfigError(f"{where}: expected [x0, y0, width, height]")
    return tuple(parse_number(x) for x in v)


def _section(cls, raw, where, convert):
    raw = raw or {}
    names = [f.name for f in dataclasses.fields(cls)]
    _check_keys(raw, names, where)
    obj = cls()
    for k, v in raw.items():
        setattr(obj, k, convert(k, v))
    return obj


def from_dict(raw: dict, base_dir=".") -> ExperimentConfig:
    if raw is None:
        raw = {}
    top = [f.name for f in dataclasses.fields(ExperimentConfig) if f.name != "base_dir"]
    _check_keys(raw, top, "config")
    cfg = ExperimentConfig(base_dir=Path(base_dir))

    def grid_conv(k, v):
        if k in ("nx", "ny"):
            return _int(v, f"grid.{k}", 3)
        return _rect(v, f"grid.{k}")

    cfg.grid = _section(GridConfig, raw.get("grid"), "grid", grid_conv)

    for name, kinds, cls in (("potential", POTENTIAL_KINDS, PotentialConfig),
                             ("boundary", BOUNDARY_KINDS, BoundaryConfig)):
        sec = raw.get(name)
        if sec is not None:
            _check_keys(sec, ["kind", "params"], name)
            kind = sec.get("kind", "constant")
            if kind not in kinds:
                raise ConfigError(f"{name}.kind must be one of {sorted(kinds)}, got {kind!r}")
            params = sec.get("params") or {}
            _check_keys(params, kinds[kind], f"{name}.params")
            if kind == "file" and "path" not in params:
                raise ConfigError(f"{name}.params.path is required for kind 'file'")
            setattr(cfg, name, cls(kind, dict(params)))

    if "m" in raw:
        cfg.m = _int(raw["m"], "m", 2)
    cfg.solver = _section(
        SolverConfig, raw.get("solver"), "solver",
        lambda k, v: _pos(v, "solver.tol") if k == "tol" else _int(v, "solver.max_iter", 1),
    )

    def lin_conv(k, v):
        if k == "eps":
            return _pos(v, "linearization.eps")
        if v not in ("dn_direct", "dn_fd"):
            raise ConfigError(f"linearization.method must be dn_direct or dn_fd, got {v!r}")
        return v

    cfg.linearization = _section(LinearizationConfig, raw.get("linearization"),
                                 "linearization", lin_conv)

    def lat_conv(k, v):
        if k == "L_box":
            return None if v is None else _pos(v, "lattice.L_box")
        x = parse_number(v)
        if not (x >= 0 and math.isfinite(x)):
            raise ConfigError(f"lattice.radius must be >= 0, got {v!r}")
        return x

    cfg.lattice = _section(LatticeConfig, raw.get("lattice"), "lattice", lat_conv)

    def ver_conv(k, v):
        if k == "gauge_amplitude":
            return _pos(v, "verify.gauge_amplitude")
        lo = {"completeness_n": 3, "completeness_m": 2}.get(k, 1)
        return _int(v, f"verify.{k}", lo)

    cfg.verify = _section(VerifyConfig, raw.get("verify"), "verify", ver_conv)

    def probe_conv(k, v):
        if k == "amplitude":
            return _pos(v, "probe.amplitude")
        if not isinstance(v, (list, tuple)) or not v:
            raise ConfigError(f"probe.{k}: expected a non-empty list")
        if k == "frequencies":
            return tuple(_int(x, "probe.frequencies", 0) for x in v)
        return tuple(_pos(x, "probe.scales") for x in v)

    cfg.probe = _section(ProbeConfig, raw.get("probe"), "probe", probe_conv)
    if "seed" in raw:
        cfg.seed = _int(raw["seed"], "seed", 0)
    if "workers" in raw:
        cfg.workers = _int(raw["workers"], "workers", 1)
    if "output_dir" in raw:
        if not isinstance(raw["output_dir"], str):
            raise ConfigError("output_dir must be a string")
        cfg.output_dir = raw["output_dir"]
    validate(cfg)
    return cfg


def check_step(cfg: ExperimentConfig, order: int) -> None:
    if cfg.linearization.eps ** order < MIN_STEP_POWER:
        raise ConfigError(
            f"linearization.eps^{order} = {cfg.linearization.eps ** order:.3g} "
            f"is below {MIN_STEP_POWER:g}"
        )


def validate(cfg: ExperimentConfig) -> None:
    """Check cross-field preconditions; raises ConfigError."""
    try:
        grid = cfg.build_grid()
    except GridError as exc:
        raise ConfigError(f"grid: {exc}") from exc
    for path in cfg.input_files():
        if not path.is_file():
            raise ConfigError(f"input file not found: {path}")
    if cfg.lattice.L_box is not None and cfg.lattice.L_box < max(grid.lx, grid.ly) * (1 - 1e-12):
        raise ConfigError("lattice.L_box must be at least the domain side")
    if cfg.lattice.radius * grid.diameter > math.log(1e12):
        raise ConfigError("lattice.radius too large: exp(|xi| * diam) exceeds 1e12")
    # vanishing-order checks difference up to order m - 1
    check_step(cfg, cfg.m - 1)
    try:
        cfg.build_potential(grid)
        cfg.build_boundary(grid)
    except (GridError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot build inputs: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML in {path}: {exc}") from exc
    return from_dict(raw, base_dir=path.parent)
