"""
Command-line driver.

    convdiff solve       --preset paper1d --stab supg --out run1
    convdiff convergence --preset paper1d --b 10 --degree 1,2,3 --n 32,64,128
    convdiff oracle      --preset paper2d --points "0.5,1;0.5,0.5"

Settings come from the preset, then an optional ``--config`` file of
``key=value`` lines, then command-line flags.
Exit codes: 0 ok, 2 bad configuration, 3 solver failure, 4 oracle failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from dataclasses import dataclass, field, fields

import numpy as np

from .analytic import (
    SeriesParams,
    TruncationError,
    exact_1d,
    exact_1d_derivative,
    exact_2d,
    exact_2d_gradient,
    exact_2d_with_counts,
    oracle_residual_check,
    residual_check_1d,
)
from .assembly import solve_problem
from .linsolve import SingularSystemError
from .mesh import build_interval_mesh, build_unit_square_mesh
from .metrics import convergence_rates, error_norms
from .output import fmt, write_csv, write_svg, write_vtk
from .problem import paper_1d, paper_2d
from .stabilization import Mode, StabilizationConfig

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_ORACLE = 0, 2, 3, 4

PRESETS = {
    "paper1d": dict(dim=1, b=50.0, eps=1.0, degree=[3], n=[30], stab="galerkin"),
    "paper2d": dict(dim=2, b=50.0, eps=1.0, degree=[2], n=[32], stab="galerkin"),
    "custom": dict(dim=1, b=0.0, eps=1.0, degree=[1], n=[10], stab="galerkin"),
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    preset: str = "paper1d"
    dim: int = 1
    b: float = 50.0
    eps: float = 1.0
    degree: list = field(default_factory=lambda: [3])
    n: list = field(default_factory=lambda: [30])
    stab: str = "galerkin"
    beta: float = 0.5
    tol: float = 1e-10
    out: str = "out"
    layers: list = field(default_factory=lambda: [0.5, 0.7])
    points: list | None = None

    @property
    def b_eff(self) -> float:
        """Convection relative to diffusion; the oracles are written for eps = 1."""
        return self.b / self.eps

    def stabilization(self) -> StabilizationConfig:
        return StabilizationConfig(Mode(self.stab), self.beta)


def _int_list(text):
    return [int(v) for v in str(text).split(",") if v.strip()]


def _float_list(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def _points(text):
    pts = []
    for chunk in str(text).split(";"):
        if chunk.strip():
            pts.append(tuple(float(v) for v in chunk.split(",")))
    return pts


PARSERS = {
    "preset": str,
    "dim": int,
    "b": float,
    "eps": float,
    "degree": _int_list,
    "n": _int_list,
    "stab": str,
    "beta": float,
    "tol": float,
    "out": str,
    "layers": _float_list,
    "points": _points,
}


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in PARSERS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def build_config(raw: dict) -> RunConfig:
    """Merge preset defaults with raw string/typed overrides and validate."""
    preset = raw.get("preset") or "paper1d"
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    values = dict(PRESETS[preset], preset=preset)
    for key, value in raw.items():
        if value is None or key == "preset":
            continue
        try:
            values[key] = PARSERS[key](value) if isinstance(value, str) else value
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid value for {key}: {value!r}") from exc
    if preset != "custom" and values["dim"] != PRESETS[preset]["dim"]:
        raise ConfigError(f"preset {preset} is {PRESETS[preset]['dim']}D")
    cfg = RunConfig(**values)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig):
    if cfg.dim not in (1, 2):
        raise ConfigError("dim must be 1 or 2")
    for name in ("b", "eps", "beta", "tol"):
        if not math.isfinite(getattr(cfg, name)):
            raise ConfigError(f"{name} must be finite")
    if cfg.eps <= 0:
        raise ConfigError("eps must be > 0")
    if cfg.beta < 0:
        raise ConfigError("beta must be >= 0")
    if cfg.tol <= 0:
        raise ConfigError("tol must be > 0")
    if cfg.stab not in {m.value for m in Mode}:
        raise ConfigError(f"stab must be one of galerkin, supg, artdiff; got {cfg.stab!r}")
    if not cfg.n or any(k < 1 for k in cfg.n):
        raise ConfigError("mesh size n must be >= 1")
    if not cfg.degree or any(not 1 <= p <= 5 for p in cfg.degree):
        raise ConfigError("degree must be in [1, 5]")
    limit = 700.0 if cfg.dim == 1 else 200.0
    if abs(cfg.b_eff) > limit:
        raise ConfigError(f"|b/eps| must be <= {limit:g} for the reference solution")
    if any(not (math.isfinite(y) and 0.0 <= y <= 1.0) for y in cfg.layers):
        raise ConfigError("layers must lie in [0, 1]")
    if cfg.points is not None:
        for pt in cfg.points:
            if len(pt) != cfg.dim or any(not (math.isfinite(v) and 0.0 <= v <= 1.0) for v in pt):
                raise ConfigError(f"point {pt} is not in the closed unit {'interval' if cfg.dim == 1 else 'square'}")


def make_problem(cfg: RunConfig):
    return paper_1d(cfg.b, cfg.eps) if cfg.dim == 1 else paper_2d(cfg.b, cfg.eps)


def make_mesh(cfg: RunConfig, n: int):
    return build_interval_mesh(n) if cfg.dim == 1 else build_unit_square_mesh(n)


def boundary_data_2d(x, y):
    """Dirichlet data of the 2D preset, NaN away from the boundary."""
    u = np.full(np.shape(x), np.nan)
    tol = 1e-14
    on_left, on_right = x <= tol, x >= 1 - tol
    on_bottom, on_top = y <= tol, y >= 1 - tol
    u[on_top | on_right] = 0.0
    u[on_left | on_bottom] = np.where((on_left & on_top) | (on_bottom & on_right), 0.5, 1.0)[
        on_left | on_bottom
    ]
    return u


def oracle_for(cfg: RunConfig):
    """(value, gradient) callables of the reference solution on (npts, dim) arrays.

    In 2D, boundary points take the Dirichlet data; the series is used inside.
    """
    if cfg.dim == 1:
        return (
            lambda X: exact_1d(X[:, 0], cfg.b_eff),
            lambda X: exact_1d_derivative(X[:, 0], cfg.b_eff)[:, None],
        )
    params = SeriesParams(cfg.b_eff, tol=cfg.tol)

    def value(X):
        u = boundary_data_2d(X[:, 0], X[:, 1])
        inside = np.isnan(u)
        if inside.any():
            u[inside] = exact_2d(X[inside, 0], X[inside, 1], params)
        return u

    def gradient(X):
        gx, gy = exact_2d_gradient(X[:, 0], X[:, 1], params)
        return np.column_stack([gx, gy])

    return value, gradient


def _describe(cfg, p, n):
    return f"{cfg.preset} dim={cfg.dim} b={cfg.b:g} eps={cfg.eps:g} p={p} n={n} stab={cfg.stab}"


def run_solve(cfg: RunConfig) -> int:
    p, n = cfg.degree[0], cfg.n[0]
    problem = make_problem(cfg)
    mesh = make_mesh(cfg, n)
    start = time.perf_counter()
    solution = solve_problem(problem, mesh, p, cfg.stabilization(), tol=1e-10)
    wall = time.perf_counter() - start
    value, gradient = oracle_for(cfg)
    report = error_norms(solution, value, gradient)

    os.makedirs(cfg.out, exist_ok=True)
    coords = solution.coords
    names = ["x", "y"][: cfg.dim]
    write_csv(
        os.path.join(cfg.out, "solution.csv"),
        names + ["u"],
        [list(c) + [u] for c, u in zip(coords, solution.values)],
    )
    header = ["preset", "dim", "b", "eps", "degree", "n", "stab", "beta", "dof", "cells",
              "l2", "linf", "h1_semi", "overshoot", "undershoot", "h_max", "wall_time"]
    row = [cfg.preset, cfg.dim, cfg.b, cfg.eps, p, n, cfg.stab, cfg.beta, report.dof_count,
           mesh.n_cells, report.l2, report.linf, report.h1_semi, report.overshoot,
           report.undershoot, report.h_max, wall]
    write_csv(os.path.join(cfg.out, "report.csv"), header, [row])

    if cfg.dim == 1:
        order = np.argsort(coords[:, 0], kind="stable")
        xs = np.linspace(0.0, 1.0, 401)
        write_svg(
            os.path.join(cfg.out, "solution.svg"),
            [("FEM", coords[order, 0], solution.values[order], "#d62728"),
             ("exact", xs, exact_1d(xs, cfg.b_eff), "#1f77b4")],
            title=_describe(cfg, p, n),
        )
    else:
        write_vtk(os.path.join(cfg.out, "solution.vtk"), solution, title=_describe(cfg, p, n))
        xs = np.linspace(0.0, 1.0, 201)
        for y in cfg.layers:
            pts = np.column_stack([xs, np.full_like(xs, y)])
            uh = solution.evaluate(pts)
            ue = value(pts)
            tag = f"{y:g}"
            write_csv(os.path.join(cfg.out, f"layer_y{tag}.csv"), ["x", "y", "u_h", "u_exact"],
                      [[a, y, b, c] for a, b, c in zip(xs, uh, ue)])
            write_svg(
                os.path.join(cfg.out, f"layer_y{tag}.svg"),
                [("FEM", xs, uh, "#d62728"), ("exact", xs, ue, "#1f77b4")],
                title=f"{_describe(cfg, p, n)}, y = {tag}",
            )

    print(f"{_describe(cfg, p, n)}")
    print(f"  cells={mesh.n_cells} dof={report.dof_count} solve_time={wall:.3f}s")
    print(f"  l2={report.l2:.6e} linf={report.linf:.6e} h1_semi={report.h1_semi:.6e}")
    print(f"  overshoot={report.overshoot:.6e} undershoot={report.undershoot:.6e}")
    return EXIT_OK


def run_convergence(cfg: RunConfig) -> int:
    ns = sorted(set(cfg.n))
    if len(ns) < 2:
        raise ConfigError("convergence needs at least two mesh sizes")
    problem = make_problem(cfg)
    value, gradient = oracle_for(cfg)
    rows = []
    for p in cfg.degree:
        results = []
        for n in ns:
            mesh = make_mesh(cfg, n)
            sol = solve_problem(problem, mesh, p, cfg.stabilization(), tol=1e-10)
            rep = error_norms(sol, value, gradient)
            results.append(rep)
            rows.append(["run", p, n, rep.h_max, rep.dof_count, rep.l2, rep.h1_semi, rep.linf, rep.overshoot])
            print(f"p={p} n={n} dof={rep.dof_count} l2={rep.l2:.4e} h1={rep.h1_semi:.4e} linf={rep.linf:.4e}")
        rates = []
        for attr in ("l2", "h1_semi", "linf"):
            pairs = [(r.h_max, getattr(r, attr)) for r in results]
            rates.append(convergence_rates(pairs) if all(e > 0 for _, e in pairs) else float("nan"))
        rows.append(["rate", p, "", "", "", rates[0], rates[1], rates[2], ""])
        print(f"p={p} rates: l2={rates[0]:.3f} h1={rates[1]:.3f} linf={rates[2]:.3f}")
    os.makedirs(cfg.out, exist_ok=True)
    write_csv(os.path.join(cfg.out, "rates.csv"),
              ["kind", "degree", "n", "h", "dof", "l2", "h1_semi", "linf", "overshoot"], rows)
    return EXIT_OK


def run_oracle(cfg: RunConfig) -> int:
    if cfg.points is not None:
        pts = np.array(cfg.points, dtype=float).reshape(-1, cfg.dim)
    elif cfg.dim == 1:
        pts = np.linspace(0.0, 1.0, 11).reshape(-1, 1)
    else:
        g = np.linspace(0.0, 1.0, 11)
        pts = np.array([(x, y) for y in g for x in g])

    if cfg.dim == 1:
        vals = exact_1d(pts[:, 0], cfg.b_eff)
        counts = np.ones(len(pts), dtype=np.int64)
        residual = residual_check_1d(cfg.b_eff, pts[:, 0])
        checked = int(np.sum((pts[:, 0] >= 0.05) & (pts[:, 0] <= 0.95))) or 9
    else:
        params = SeriesParams(cfg.b_eff, tol=cfg.tol)
        vals, counts = exact_2d_with_counts(pts[:, 0], pts[:, 1], params)
        interior = np.all((pts >= 0.05) & (pts <= 0.95), axis=1)
        check_pts = pts[interior]
        if len(check_pts) == 0:
            g = np.linspace(0.1, 0.9, 5)
            check_pts = np.array([(x, y) for y in g for x in g])
        residual = oracle_residual_check(params, check_pts)
        checked = len(check_pts)

    os.makedirs(cfg.out, exist_ok=True)
    names = ["x", "y"][: cfg.dim]
    write_csv(os.path.join(cfg.out, "oracle.csv"), names + ["u", "terms"],
              [list(p) + [v, int(c)] for p, v, c in zip(pts, vals, counts)])
    write_csv(os.path.join(cfg.out, "oracle_check.csv"), ["b", "points_checked", "max_relative_residual"],
              [[cfg.b_eff, checked, residual]])
    for p, v, c in zip(pts, vals, counts):
        print(" ".join(fmt(float(t)) for t in p), fmt(float(v)), f"terms={int(c)}")
    print(f"residual check: {checked} interior point(s), max relative residual {residual:.3e}")
    return EXIT_OK


COMMANDS = {"solve": run_solve, "convergence": run_convergence, "oracle": run_oracle}


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="convdiff", description="Steady convection-diffusion FEM solver")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("solve", "solve one configuration and write solution/report files"),
        ("convergence", "sweep mesh sizes and degrees and fit convergence rates"),
        ("oracle", "tabulate the analytic solution"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key=value settings file")
        p.add_argument("--preset", choices=sorted(PRESETS))
        p.add_argument("--dim", help="1 or 2 (custom preset)")
        p.add_argument("--b", help="convection coefficient (b1 = b2 = b in 2D)")
        p.add_argument("--eps", help="diffusion scale")
        p.add_argument("--degree", help="element degree; comma list for convergence")
        p.add_argument("--n", help="cells (per side in 2D); comma list for convergence")
        p.add_argument("--stab", help="galerkin | supg | artdiff")
        p.add_argument("--beta", help="artificial diffusion multiplier")
        p.add_argument("--layers", help="comma-separated y values for 2D line output")
        p.add_argument("--tol", help="series truncation tolerance")
        p.add_argument("--points", help='oracle points, e.g. "0;0.5;1" or "0.5,1;0.5,0.5"')
        p.add_argument("--out", help="output directory")
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        raw = read_config_file(args.config) if args.config else {}
        for f in fields(RunConfig):
            flag = getattr(args, f.name, None)
            if flag is not None:
                raw[f.name] = flag
        cfg = build_config(raw)
        if args.command == "convergence" and len(set(cfg.n)) < 2:
            raise ConfigError("convergence needs at least two mesh sizes (--n 32,64,128)")
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SingularSystemError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except TruncationError as exc:
        print(f"oracle failure: {exc}", file=sys.stderr)
        return EXIT_ORACLE


if __name__ == "__main__":
    sys.exit(main())
