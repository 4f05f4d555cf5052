"""Command-line experiment runner.

    nlcalderon <subcommand> --config <path> [--output <dir>]

Exit codes: 0 success, 2 invalid config, 3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import logging
import math
import os
import shutil
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, check_step, load_config
from .errors import CalderonError, ConfigError
from .grid import (
    GridFunction,
    boundary_integral,
    build_grid,
    interior_integral,
    normal_derivative,
    smooth_random_boundary,
)
from .harmonic import linear_dn, solve_laplace_dirichlet
from .linearization import (
    LinearizationRequest,
    mixed_fd_dn,
    mth_linearization_direct,
    verify_vanishing_orders,
)
from .reconstruction import l2_norm, reconstruct_potential, stability_probe, write_samples_csv
from .semilinear import SemilinearProblem, solve_semilinear
from .verification import ConformalFactor, completeness_smin, gauge_check

log = logging.getLogger("nlcalderon")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3
SUBCOMMANDS = ("forward", "dn", "linearize", "reconstruct", "verify", "probe-stability")


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _rng(cfg: ExperimentConfig, stream: int):
    return np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(stream,)))


def _problem(cfg):
    grid = cfg.build_grid()
    return grid, SemilinearProblem(cfg.build_potential(grid), cfg.m)


def run_forward(cfg, out: Path):
    grid, p = _problem(cfg)
    f = cfg.build_boundary(grid)
    u, report = solve_semilinear(p, f, cfg.solver.tol, cfg.solver.max_iter)
    f.to_csv(out / "boundary_data.csv")
    u.to_csv(out / "solution.csv")
    _write_json(out / "report.json", report.to_dict())


def run_dn(cfg, out: Path):
    grid, p = _problem(cfg)
    f = cfg.build_boundary(grid)
    u, report = solve_semilinear(p, f, cfg.solver.tol, cfg.solver.max_iter)
    f.to_csv(out / "boundary_data.csv")
    normal_derivative(u, p.source(u)).to_csv(out / "dn.csv")
    _write_json(out / "report.json", report.to_dict())


def _unit_data(cfg, grid, count, stream):
    rng = _rng(cfg, stream)
    return [smooth_random_boundary(grid, rng) for _ in range(count)]


def run_linearize(cfg, out: Path):
    check_step(cfg, cfg.m)
    grid, p = _problem(cfg)
    data = _unit_data(cfg, grid, p.m, 2)
    eps = cfg.linearization.eps
    fd = mixed_fd_dn(LinearizationRequest(p, data, eps, tol=cfg.solver.tol))
    direct = mth_linearization_direct(p, data)
    for i, f in enumerate(data, 1):
        f.to_csv(out / f"data_{i}.csv")
    fd.to_csv(out / "linearization_fd.csv")
    direct.to_csv(out / "linearization_direct.csv")
    diff = (fd - direct).sup_norm()
    scale = direct.sup_norm()
    _write_json(out / "comparison.json", {
        "order": p.m,
        "eps": eps,
        "sup_difference": diff,
        "relative_difference": diff / scale if scale > 0 else diff,
    })


def run_reconstruct(cfg, out: Path):
    grid, p = _problem(cfg)
    lattice = cfg.build_lattice(grid)
    executor = ThreadPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    try:
        res = reconstruct_potential(p, lattice, cfg.linearization.method,
                                    eps=cfg.linearization.eps, tol=cfg.solver.tol,
                                    executor=executor)
    finally:
        if executor is not None:
            executor.shutdown()
    write_samples_csv(res.samples, out / "samples.csv")
    res.q_rec.to_csv(out / "q_rec.csv")
    res.write_summary(out / "summary.json")


def _identity_residuals(p, data_sets):
    g = p.grid
    out = []
    for data in data_sets:
        lhs = boundary_integral(mth_linearization_direct(p, data[:-1]) * data[-1])
        prod = p.q
        for f in data:
            prod = prod * solve_laplace_dirichlet(g, f)
        rhs = -math.factorial(p.m) * interior_integral(prod)
        out.append(abs(lhs - rhs) / max(abs(rhs), abs(lhs), np.finfo(float).tiny))
    return out


def run_verify(cfg, out: Path):
    grid, p = _problem(cfg)
    v = cfg.verify
    rng = _rng(cfg, 3)
    tuples = [[smooth_random_boundary(grid, rng) for _ in range(p.m + 1)]
              for _ in range(v.n_tuples)]
    res = _identity_residuals(p, tuples)
    _write_json(out / "identity_residual.json", {
        "m": p.m, "residuals": res, "residual": max(res),
    })

    rng = _rng(cfg, 4)
    X, Y = grid.coords
    bubble = 16 * (X - grid.x0) * (grid.x0 + grid.lx - X) * (Y - grid.y0) * (grid.y0 + grid.ly - Y)
    bubble = bubble / (grid.lx**2 * grid.ly**2)
    gauge = []
    for _ in range(v.gauge_samples):
        c = rng.uniform(0.1, 1.0)
        a, b = rng.uniform(0, 2 * np.pi, 2)
        wiggle = 1.5 + np.sin(2 * np.pi * X + a) * np.cos(2 * np.pi * Y + b)
        sigma = GridFunction(grid, 1 + c * bubble * wiggle)
        f = smooth_random_boundary(grid, rng) * v.gauge_amplitude
        gauge.append(gauge_check(p, ConformalFactor(sigma), f, cfg.solver.tol))
    _write_json(out / "gauge.json", {"sup_dn_difference": max(gauge), "samples": gauge})

    if p.m >= 3:
        data = _unit_data(cfg, grid, p.m - 1, 5)
        norms = verify_vanishing_orders(p, data, cfg.linearization.eps, cfg.solver.tol)
        scale = linear_dn(grid, data[0]).sup_norm()
        _write_json(out / "vanishing_orders.json", {
            "orders": list(range(2, p.m)), "sup_norms": norms,
            "first_order_scale": scale, "eps": cfg.linearization.eps,
        })

    L = min(grid.lx, grid.ly)
    cgrid = build_grid(v.completeness_n, v.completeness_n, (grid.x0, grid.y0, L, L))
    n_products = v.oversample * cgrid.n_interior
    smin, deficit = completeness_smin(cgrid, v.completeness_m, n_products, cfg.seed)
    _write_json(out / "completeness.json", {
        "smin": smin, "rank_deficit": deficit, "n_products": n_products,
        "seed": cfg.seed, "m": v.completeness_m, "grid": v.completeness_n,
    })


def run_probe(cfg, out: Path):
    grid = cfg.build_grid()
    q_base = cfg.build_potential(grid)
    pr = cfg.probe
    X, Y = grid.coords
    c = grid.center
    bump = np.exp(-50 * ((X - c[0]) ** 2 + (Y - c[1]) ** 2))
    labels, perts = [], []
    for j in pr.frequencies:
        shape = GridFunction(grid, np.cos(2 * np.pi * j * (X - grid.x0) / grid.lx) * bump)
        shape = shape * (pr.amplitude / l2_norm(shape))
        for s in pr.scales:
            labels.append((j, s))
            perts.append(shape * s)
    rows = stability_probe(grid, q_base, perts)
    with open(out / "stability.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frequency", "scale", "dn_distance", "l2_distance"])
        for (j, s), r in zip(labels, rows):
            w.writerow([j, repr(float(s)), repr(float(r.dn_distance)), repr(float(r.l2_distance))])
    _write_json(out / "stability_note.json", {
        "dn_distance": "sup over a fixed 16-pair probe set of unit boundary data "
                       "(operational surrogate of the operator norm)",
    })


RUNNERS = {
    "forward": run_forward,
    "dn": run_dn,
    "linearize": run_linearize,
    "reconstruct": run_reconstruct,
    "verify": run_verify,
    "probe-stability": run_probe,
}


def _input_hash(cfg: ExperimentConfig, subcommand: str) -> str:
    h = hashlib.sha256()
    h.update(subcommand.encode())
    # where results go is not an input
    echo = {k: v for k, v in cfg.to_dict().items() if k != "output_dir"}
    h.update(json.dumps(echo, sort_keys=True).encode())
    for path in cfg.input_files():
        h.update(Path(path).read_bytes())
    return h.hexdigest()


def run(subcommand: str, config_path, output=None) -> int:
    """Run one subcommand; artifacts appear in the output directory only on success."""
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        log.error("invalid config: %s", exc)
        return EXIT_CONFIG
    out_dir = Path(output) if output is not None else cfg.resolve(cfg.output_dir)
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out_dir.name}.tmp-", dir=out_dir.parent))
    try:
        RUNNERS[subcommand](cfg, tmp)
        artifacts = sorted(p.name for p in tmp.iterdir())
        manifest = {
            "subcommand": subcommand,
            "config": cfg.to_dict(),
            "input_hash": _input_hash(cfg, subcommand),
            "artifacts": {name: _sha256(tmp / name) for name in artifacts},
            "version": __version__,
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        }
        _write_json(tmp / "manifest.json", manifest)
        out_dir.mkdir(parents=True, exist_ok=True)
        for name in artifacts + ["manifest.json"]:
            os.replace(tmp / name, out_dir / name)
    except ConfigError as exc:
        log.error("invalid config: %s", exc)
        return EXIT_CONFIG
    except CalderonError as exc:
        log.error("%s failed: %s: %s", subcommand, type(exc).__name__, exc)
        return EXIT_SOLVER
    finally:
        shutil.rmtree(tmp, ignore_errors=True)
    log.info("%s: wrote %d artifacts to %s", subcommand, len(artifacts) + 1, out_dir)
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="nlcalderon", description=__doc__.splitlines()[0])
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="YAML experiment config")
    parser.add_argument("--output", default=None, help="output directory (overrides output_dir)")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    return run(args.subcommand, args.config, args.output)


if __name__ == "__main__":
    sys.exit(main())
