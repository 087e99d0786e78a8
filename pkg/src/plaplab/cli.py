"""Experiment configuration, orchestration, and CSV/report emission.

Configs are flat ``key = value`` files (`#` comments) with CLI flags
overriding file values; the PLAP_OUT environment variable overrides the
output directory.  Every run appends a manifest line (config hash,
library versions, timestamp) so results stay traceable, and writes a
plain-text report with one PASS/FAIL/INFO line per checked invariant.

Exit codes: 0 success, 2 nonexistence verdict, 3 no convergence,
4 configuration error.  ``verify-all`` exits 0 only when every acceptance
criterion passes.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import math
import os
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Optional

import numpy as np
import scipy

from . import __version__
from .asymptotics import sweep_q_high, sweep_q_low
from .eigensolver import principal_eigenpair
from .errors import (
    ConfigError,
    InfeasibleWindow,
    NoConvergence,
    ParseError,
    RangeError,
    UnknownKey,
)
from .logistic_solver import Existence, solve_logistic
from .mesh import (
    BumpZeroCoefficient,
    ConstantCoefficient,
    Field,
    build_grid,
    coefficient_field,
    subdomain_mask,
    write_field_csv,
)
from .obstacle_solver import FreeBoundaryExistence, solve_free_boundary, solve_vi
from .plap_core import PLapParams, norm
from .shooting import lambda1_closed_form, shooting_lambda1

SUBCOMMANDS = ("eigen", "solve", "sweep-low", "sweep-high", "obstacle", "vi", "verify-all")

EXIT_OK = 0
EXIT_NONEXISTENCE = 2
EXIT_NO_CONVERGENCE = 3
EXIT_CONFIG = 4


@dataclass
class ExperimentConfig:
    subcommand: str = "solve"
    p: float = 2.0
    a: float = 12.0
    q: float = 2.0
    schedule: Optional[tuple] = None
    n_cells: int = 1024
    x_left: float = 0.0
    x_right: float = 1.0
    b_kind: str = "constant"       # constant | bump-zero
    b_level: float = 1.0
    omega0: tuple = (0.4, 0.6)
    ramp_width: Optional[float] = None
    tol: float = 1e-8
    out_dir: str = "."
    seed: int = 0
    emit_gnuplot: bool = False
    criteria: Optional[tuple] = None  # verify-all subset, e.g. (1, 2, 13)

    def validate(self) -> "ExperimentConfig":
        if self.subcommand not in SUBCOMMANDS:
            raise RangeError(f"unknown subcommand {self.subcommand!r}")
        if not self.p > 1.0:
            raise RangeError(f"p must be > 1, got {self.p}")
        if not self.q > self.p - 1.0:
            raise RangeError(f"q must be > p-1, got q={self.q}, p={self.p}")
        if self.n_cells < 4:
            raise RangeError(f"n_cells must be >= 4, got {self.n_cells}")
        if not self.x_left < self.x_right:
            raise RangeError(f"need x_left < x_right, got {self.x_left}, {self.x_right}")
        if self.b_kind not in ("constant", "bump-zero"):
            raise RangeError(f"b_kind must be constant or bump-zero, got {self.b_kind!r}")
        if self.b_level < 0:
            raise RangeError(f"b_level must be >= 0, got {self.b_level}")
        if not self.tol > 0:
            raise RangeError(f"tol must be > 0, got {self.tol}")
        if len(self.omega0) != 2 or not self.omega0[0] < self.omega0[1]:
            raise RangeError(f"omega0 must be an increasing pair, got {self.omega0}")
        if self.schedule is not None and len(self.schedule) == 0:
            raise RangeError("schedule must be nonempty")
        return self


_KEY_TYPES = {
    "subcommand": str,
    "p": float,
    "a": float,
    "q": float,
    "schedule": "floats",
    "n_cells": int,
    "x_left": float,
    "x_right": float,
    "b_kind": str,
    "b_level": float,
    "omega0": "floats",
    "ramp_width": float,
    "tol": float,
    "out_dir": str,
    "seed": int,
    "emit_gnuplot": "bool",
    "criteria": "ints",
}


def _coerce(key: str, raw):
    kind = _KEY_TYPES[key]
    if raw is None:
        return None
    if isinstance(raw, (tuple, list)):
        return tuple(raw)
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    try:
        if kind == "floats":
            return tuple(float(t) for t in text.split(",") if t.strip())
        if kind == "ints":
            return tuple(int(t) for t in text.split(",") if t.strip())
        if kind == "bool":
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        return kind(text)
    except ValueError as exc:
        raise RangeError(f"bad value for {key}: {raw!r}") from exc


def parse_config(text: str, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Parse flat `key = value` lines; overrides (CLI flags) win over file values."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ParseError(lineno, line)
        key, _, raw = body.partition("=")
        key = key.strip().replace("-", "_")
        if key not in _KEY_TYPES:
            raise UnknownKey(f"line {lineno}: unknown key {key!r}")
        values[key] = _coerce(key, raw)
    for key, raw in (overrides or {}).items():
        key = key.replace("-", "_")
        if raw is None:
            continue
        if key not in _KEY_TYPES:
            raise UnknownKey(f"override: unknown key {key!r}")
        values[key] = _coerce(key, raw)
    return ExperimentConfig(**values).validate()


def _config_hash(config: ExperimentConfig) -> str:
    canon = ";".join(
        f"{f.name}={getattr(config, f.name)!r}" for f in dataclasses.fields(config)
    )
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _write_manifest(config: ExperimentConfig, out_dir: str) -> None:
    path = os.path.join(out_dir, "manifest.csv")
    fresh = not os.path.exists(path)
    with open(path, "a") as fh:
        if fresh:
            fh.write("timestamp,config_hash,plaplab,numpy,scipy,subcommand\n")
        stamp = datetime.now(timezone.utc).isoformat()
        fh.write(
            f"{stamp},{_config_hash(config)},{__version__},"
            f"{np.__version__},{scipy.__version__},{config.subcommand}\n"
        )


def _write_report(out_dir: str, name: str, lines) -> None:
    with open(os.path.join(out_dir, name), "w") as fh:
        for line in lines:
            fh.write(line + "\n")


def _build_b(config: ExperimentConfig, grid):
    if config.b_kind == "constant":
        return coefficient_field(grid, ConstantCoefficient(config.b_level))
    a0, b0 = config.omega0
    return coefficient_field(
        grid, BumpZeroCoefficient(a0, b0, config.b_level, config.ramp_width)
    )


def _gnuplot_script(out_dir: str, data_file: str, columns, title: str) -> None:
    lines = [
        "set datafile separator ','",
        f"set title '{title}'",
        "set key autotitle columnhead",
        "plot " + ", ".join(f"'{data_file}' using {c} with linespoints" for c in columns),
    ]
    _write_report(out_dir, data_file.replace(".csv", ".gp"), lines)


def _run_eigen(config: ExperimentConfig, out_dir: str) -> int:
    grid = build_grid(config.x_left, config.x_right, config.n_cells)
    eig = principal_eigenpair(grid, Field.zeros(grid), config.p, config.tol)
    length = config.x_right - config.x_left
    closed = lambda1_closed_form(config.p, length)
    shot = shooting_lambda1(config.p, length)
    write_field_csv(eig.U, os.path.join(out_dir, "eigenfunction.csv"))
    rel_closed = abs(eig.lam - closed) / closed
    rel_shot = abs(eig.lam - shot) / closed
    lines = [
        f"INFO lambda1 estimate = {eig.lam:.12g}",
        f"INFO closed form (p-1)*(pi_p/L)^p = {closed:.12g}",
        f"INFO shooting oracle = {shot:.12g}",
        f"INFO rel-error vs closed form = {rel_closed:.3e}",
        f"INFO rel-error vs shooting oracle = {rel_shot:.3e}",
        f"{'PASS' if eig.residual <= config.tol else 'FAIL'} eigen residual "
        f"{eig.residual:.3e} <= tol {config.tol:.1e}",
    ]
    _write_report(out_dir, "report.txt", lines)
    if config.emit_gnuplot:
        _gnuplot_script(out_dir, "eigenfunction.csv", ["1:2"], "principal eigenfunction")
    return EXIT_OK


def _run_solve(config: ExperimentConfig, out_dir: str) -> int:
    grid = build_grid(config.x_left, config.x_right, config.n_cells)
    b = _build_b(config, grid)
    params = PLapParams(p=config.p, a=config.a, q=config.q)
    result = solve_logistic(grid, b, params, tol=config.tol)

    log_path = os.path.join(out_dir, "runlog.csv")
    fresh = not os.path.exists(log_path)
    with open(log_path, "a") as fh:
        if fresh:
            fh.write("p,a,q,n_cells,M,iterations,residual,verdict\n")
        fh.write(
            f"{config.p:.17g},{config.a:.17g},{config.q:.17g},{config.n_cells},"
            f"{result.M:.17g},{result.iterations},{result.residual:.17g},"
            f"{result.existence.value}\n"
        )
    if result.existence is not Existence.EXISTS:
        _write_report(out_dir, "report.txt", [f"INFO verdict = {result.existence.value}"])
        return EXIT_NONEXISTENCE

    write_field_csv(result.u, os.path.join(out_dir, "solution.csv"))
    lines = [
        f"INFO M = sup(u) = {result.M:.12g}",
        f"{'PASS' if result.residual <= config.tol else 'FAIL'} scaled residual "
        f"{result.residual:.3e} <= tol {config.tol:.1e}",
    ]
    min_b = float(np.min(b.values))
    if min_b > 0:
        bound = config.a / min_b + 1e-6
        ok = result.alpha_q <= bound
        lines.append(
            f"{'PASS' if ok else 'FAIL'} a-priori bound M^(q-p+1) = "
            f"{result.alpha_q:.6g} <= a/min(b) + 1e-6 = {bound:.6g}"
        )
    _write_report(out_dir, "report.txt", lines)
    if config.emit_gnuplot:
        _gnuplot_script(out_dir, "solution.csv", ["1:2"], "logistic solution")
    return EXIT_OK


def _default_schedule(config: ExperimentConfig, direction: str):
    base = config.p - 1.0
    if direction == "low":
        return [base + 2.0 ** -k for k in range(1, 9)]
    return [base + s for s in (3.0, 7.0, 15.0, 31.0, 63.0)]


def _run_sweep(config: ExperimentConfig, out_dir: str, direction: str) -> int:
    grid = build_grid(config.x_left, config.x_right, config.n_cells)
    b = _build_b(config, grid)
    schedule = list(config.schedule) if config.schedule else _default_schedule(config, direction)
    sweep = sweep_q_low if direction == "low" else sweep_q_high
    records = sweep(grid, b, config.p, config.a, schedule, config.tol)

    path = os.path.join(out_dir, "sweep.csv")
    with open(path, "w") as fh:
        fh.write("q,M,log_gap,profile_dist,iterations,residual,flag\n")
        for r in records:
            fh.write(
                f"{r.q:.17g},{r.M:.17g},{r.log_gap:.17g},{r.profile_dist:.17g},"
                f"{r.iterations},{r.residual:.17g},{r.flag}\n"
            )
    ok = [r for r in records if r.flag == "ok"]
    lines = [f"INFO {len(ok)}/{len(records)} solves converged"]
    if len(ok) >= 2:
        gaps = [abs(r.log_gap) for r in ok if math.isfinite(r.log_gap)]
        dists = [r.profile_dist for r in ok]
        if gaps:
            mono = all(g2 <= g1 + 1e-12 for g1, g2 in zip(gaps, gaps[1:]))
            lines.append(
                f"{'PASS' if mono else 'FAIL'} |log_gap| monotone along the "
                f"schedule (final {gaps[-1]:.4g})"
            )
        mono_d = all(d2 <= d1 + 1e-12 for d1, d2 in zip(dists, dists[1:]))
        lines.append(
            f"{'PASS' if mono_d else 'FAIL'} profile distance decreasing "
            f"(final {dists[-1]:.4g})"
        )
    _write_report(out_dir, "report.txt", lines)
    if config.emit_gnuplot:
        _gnuplot_script(out_dir, "sweep.csv", ["1:2", "1:4"], f"q-sweep ({direction})")
    return EXIT_OK if ok else EXIT_NO_CONVERGENCE


def _run_obstacle(config: ExperimentConfig, out_dir: str) -> int:
    grid = build_grid(config.x_left, config.x_right, config.n_cells)
    result = solve_free_boundary(grid, config.p, config.a, config.tol)
    if result.existence is FreeBoundaryExistence.NO_SOLUTION:
        _write_report(out_dir, "report.txt", ["INFO verdict = no-solution (a < lambda1)"])
        return EXIT_NONEXISTENCE
    write_field_csv(result.w, os.path.join(out_dir, "obstacle_w.csv"))
    with open(os.path.join(out_dir, "coincidence.csv"), "w") as fh:
        fh.write("x,active\n")
        for x, flag in zip(grid.nodes, result.coincidence):
            fh.write(f"{x:.17g},{int(flag)}\n")
    sup = norm(result.w, math.inf)
    lines = [
        f"INFO coincidence nodes = {int(result.coincidence.sum())}",
        f"{'PASS' if abs(sup - 1.0) <= 1e-6 else 'FAIL'} sup(w) = {sup:.12g} within 1e-6 of 1",
        f"{'PASS' if result.residual_pde <= config.tol * 10 else 'FAIL'} "
        f"equation residual off the plateau = {result.residual_pde:.3e}",
        f"INFO complementarity violation = {result.residual_comp:.3e}",
    ]
    _write_report(out_dir, "report.txt", lines)
    if config.emit_gnuplot:
        _gnuplot_script(out_dir, "obstacle_w.csv", ["1:2"], "free-boundary solution")
    return EXIT_OK


def _run_vi(config: ExperimentConfig, out_dir: str) -> int:
    grid = build_grid(config.x_left, config.x_right, config.n_cells)
    mask = subdomain_mask(grid, *config.omega0)
    result = solve_vi(grid, config.p, config.a, mask, config.tol)
    write_field_csv(result.u, os.path.join(out_dir, "vi_u.csv"))
    with open(os.path.join(out_dir, "vi_active.csv"), "w") as fh:
        fh.write("x,active\n")
        for x, flag in zip(grid.nodes, result.active):
            fh.write(f"{x:.17g},{int(flag)}\n")
    feasible = float(np.max(result.u.values[~mask.inside]))
    lines = [
        f"INFO active nodes = {int(result.active.sum())}",
        f"{'PASS' if feasible <= 1.0 + 1e-10 else 'FAIL'} u <= 1 off omega0 "
        f"(max {feasible:.12g})",
        f"{'PASS' if result.vi_defect <= config.tol else 'FAIL'} "
        f"VI probe defect = {result.vi_defect:.3e}",
    ]
    _write_report(out_dir, "report.txt", lines)
    if config.emit_gnuplot:
        _gnuplot_script(out_dir, "vi_u.csv", ["1:2"], "variational-inequality solution")
    return EXIT_OK


def _run_verify_all(config: ExperimentConfig, out_dir: str) -> int:
    from .acceptance import run_criteria

    wanted = None
    if config.criteria:
        wanted = [int(c) for c in config.criteria]
    results = run_criteria(ids=wanted, n_cells=config.n_cells)
    lines = []
    for res in results:
        line = f"{'PASS' if res.passed else 'FAIL'} {res.cid}: {res.detail}"
        print(line)
        lines.append(line)
    _write_report(out_dir, "acceptance_report.txt", lines)
    return EXIT_OK if all(r.passed for r in results) else 1


_RUNNERS = {
    "eigen": _run_eigen,
    "solve": _run_solve,
    "sweep-low": lambda c, d: _run_sweep(c, d, "low"),
    "sweep-high": lambda c, d: _run_sweep(c, d, "high"),
    "obstacle": _run_obstacle,
    "vi": _run_vi,
    "verify-all": _run_verify_all,
}


def run_experiment(config: ExperimentConfig) -> int:
    """Dispatch a validated config; returns the process exit code."""
    out_dir = os.environ.get("PLAP_OUT", config.out_dir)
    os.makedirs(out_dir, exist_ok=True)
    _write_manifest(config, out_dir)
    try:
        return _RUNNERS[config.subcommand](config, out_dir)
    except NoConvergence as exc:
        _write_report(out_dir, "report.txt", [f"FAIL no convergence: {exc}"])
        return EXIT_NO_CONVERGENCE
    except InfeasibleWindow as exc:
        _write_report(out_dir, "report.txt", [f"INFO infeasible window: {exc}"])
        return EXIT_NONEXISTENCE


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plaplab",
        description="1-D p-Laplacian logistic laboratory",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--p", dest="p")
    parser.add_argument("--a", dest="a")
    parser.add_argument("--q", dest="q")
    parser.add_argument("--schedule", help="comma-separated q values")
    parser.add_argument("--n-cells", dest="n_cells")
    parser.add_argument("--x-left", dest="x_left")
    parser.add_argument("--x-right", dest="x_right")
    parser.add_argument("--b-kind", dest="b_kind")
    parser.add_argument("--b-level", dest="b_level")
    parser.add_argument("--omega0", help="a0,b0 endpoints")
    parser.add_argument("--ramp-width", dest="ramp_width")
    parser.add_argument("--tol", dest="tol")
    parser.add_argument("--out-dir", dest="out_dir")
    parser.add_argument("--seed", dest="seed")
    parser.add_argument("--emit-gnuplot", action="store_const", const="true", dest="emit_gnuplot")
    parser.add_argument("--criteria", help="verify-all subset, e.g. 1,2,13")
    return parser


def main(argv=None) -> int:
    args = build_arg_parser().parse_args(argv)
    overrides = {
        key: getattr(args, key)
        for key in _KEY_TYPES
        if key != "subcommand" and getattr(args, key, None) is not None
    }
    overrides["subcommand"] = args.subcommand
    try:
        text = ""
        if args.config:
            with open(args.config) as fh:
                text = fh.read()
        config = parse_config(text, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run_experiment(config)


if __name__ == "__main__":
    sys.exit(main())
