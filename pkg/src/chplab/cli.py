"""
Command line scenario runner.

    chplab run --config scenario.cfg [--out DIR] [--tolerance TOL] [--include-zero]
    chplab convergence --config study.cfg [--out DIR]
    chplab verify FILE [FILE ...] [--hull HULL.csv] [--include-zero] [--tolerance TOL] [--eta PATH]

Exit status: 0 when the verdict matches the scenario's ``expect`` (default
``pass``), 1 otherwise, 2 on input errors. The config format is documented
in ``docs/config.md``.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import re
import sys
from pathlib import Path

import numpy as np

from .discretization import MeshError, NodalField, Trajectory, field_from_csv, field_to_csv, interval_mesh, rect_mesh
from .elliptic import EllipticCoefficients, SolverError, assemble, solve_dirichlet
from .geometry import ConvexPolytope, convex_hull
from .oracles import harmonic_oracle
from .parabolic import ParabolicCoefficients, ParabolicScenario, dump_trajectory, p_laplace_preset, run
from .scenarios import (
    elliptic_convergence,
    eoc,
    heat_convergence,
    random_diffusion,
    random_spd,
    run_parabolic_counterexample,
    sine_initial,
    solve_elliptic_counterexample,
)
from .verifier import (
    CHP_TOL,
    boundary_hull_elliptic,
    boundary_hull_parabolic,
    nonlinear_tolerance,
    verify,
    write_eta_csv,
)

KINDS = (
    "elliptic",
    "parabolic",
    "counterexample-elliptic",
    "counterexample-parabolic",
    "convergence",
    "verify",
)


class ConfigError(ValueError):
    pass


class Config:
    """configparser wrapper that reports file/line positions in errors."""

    def __init__(self, path):
        self.path = Path(path)
        try:
            text = self.path.read_text()
        except OSError as exc:
            raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
        self.parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
        try:
            self.parser.read_string(text, source=str(path))
        except configparser.Error as exc:
            raise ConfigError(str(exc).replace("\n", " ")) from None
        self.lines = {}
        section = None
        for lineno, line in enumerate(text.splitlines(), start=1):
            s = line.strip()
            m = re.match(r"\[(.+)\]$", s)
            if m:
                section = m.group(1).strip()
                self.lines[(section, None)] = lineno
            elif section and "=" in s and not s.startswith(("#", ";")):
                self.lines[(section, s.split("=", 1)[0].strip().lower())] = lineno

    def where(self, section, key=None):
        line = self.lines.get((section, key)) or self.lines.get((section, None))
        return f"{self.path}:{line}" if line else f"{self.path}"

    def has(self, section, key):
        return self.parser.has_option(section, key)

    def raw(self, section, key, default=None, required=False):
        if self.has(section, key):
            return self.parser.get(section, key).strip()
        if required:
            raise ConfigError(f"{self.where(section)}: missing required key '{key}' in [{section}]")
        return default

    def get(self, section, key, conv=str, default=None, required=False, check=None, expect=""):
        value = self.raw(section, key, None, required)
        if value is None:
            return default
        try:
            out = conv(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{self.where(section, key)}: bad value for '{key}': {value!r}") from None
        if check is not None and not check(out):
            raise ConfigError(f"{self.where(section, key)}: '{key}' = {value!r} out of range{expect}")
        return out


def _floats(text):
    return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]


def _matrix(text):
    rows = [[float(v) for v in r.split(",")] for r in text.split(";")]
    m = np.array(rows, dtype=float)
    if m.ndim != 2:
        raise ValueError("ragged matrix")
    return m


def _bool(text):
    t = text.lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(text)


def _build_mesh(cfg, default_interval=(0.0, 1.0)):
    dim = cfg.get("mesh", "dim", int, 1, check=lambda d: d in (1, 2), expect=" (1 or 2)")
    if dim == 1:
        cells = cfg.get("mesh", "cells", int, required=True, check=lambda m: m >= 2, expect=" (>= 2)")
        a, b = cfg.get("mesh", "interval", _floats, list(default_interval), check=lambda v: len(v) == 2 and v[0] < v[1],
                       expect=" (two increasing numbers)")
        return interval_mesh(a, b, cells)
    nx = cfg.get("mesh", "nx", int, required=True, check=lambda m: m >= 2, expect=" (>= 2)")
    ny = cfg.get("mesh", "ny", int, nx, check=lambda m: m >= 2, expect=" (>= 2)")
    xe = cfg.get("mesh", "x_extent", _floats, [0.0, 1.0], check=lambda v: len(v) == 2 and v[0] < v[1])
    ye = cfg.get("mesh", "y_extent", _floats, [0.0, 1.0], check=lambda v: len(v) == 2 and v[0] < v[1])
    return rect_mesh(tuple(xe), tuple(ye), nx, ny)


def _run_elliptic(cfg, tol):
    mesh = _build_mesh(cfg)
    rng = np.random.default_rng(cfg.get("data", "seed", int, 0))
    if cfg.has("coefficients", "metric"):
        metric = cfg.get("coefficients", "metric", _matrix)
    else:
        N = cfg.get("coefficients", "components", int, 2, check=lambda n: 1 <= n <= 8)
        metric = random_spd(rng, N, cfg.get("coefficients", "condition", float, 50.0, check=lambda c: c >= 1))
    N = metric.shape[0]
    diff = cfg.raw("coefficients", "diffusion", "1")
    if diff == "random":
        diffusion, lam = random_diffusion(rng, mesh.dim)
    else:
        try:
            diffusion = _matrix(diff) if ";" in diff else float(diff) * np.eye(mesh.dim)
        except ValueError:
            raise ConfigError(f"{cfg.where('coefficients', 'diffusion')}: bad value for 'diffusion': {diff!r}") from None
        lam = float(np.linalg.eigvalsh(0.5 * (diffusion + diffusion.T))[0])
    boundary = cfg.raw("data", "boundary", "random")
    xb = mesh.nodes[mesh.boundary_nodes]
    if boundary == "random":
        g = rng.normal(size=(len(xb), N))
    elif boundary == "constant":
        v = cfg.get("data", "boundary_value", _floats, required=True, check=lambda v: len(v) == N,
                    expect=f" (need {N} numbers)")
        g = np.tile(v, (len(xb), 1))
    elif boundary == "harmonic":
        if mesh.dim != 2:
            raise ConfigError(f"{cfg.where('data', 'boundary')}: harmonic data needs dim = 2")
        sel = [s.strip() for s in cfg.raw("data", "harmonic", "x, y").split(",")]
        if len(sel) != N:
            raise ConfigError(f"{cfg.where('data', 'harmonic')}: need {N} harmonic polynomials")
        try:
            g = harmonic_oracle(mesh, sel)[mesh.boundary_nodes]
        except KeyError as exc:
            raise ConfigError(f"{cfg.where('data', 'harmonic')}: {exc.args[0]}") from None
    else:
        raise ConfigError(f"{cfg.where('data', 'boundary')}: unknown boundary preset {boundary!r}")
    system = assemble(mesh, EllipticCoefficients(metric, diffusion, lam))
    field = solve_dirichlet(system, g)
    report = verify(field, boundary_hull_elliptic(field), CHP_TOL if tol is None else tol)
    return field, report


def _advection_along_x(a0, C):
    """``b = C sqrt(a0) e_1``, the largest drift the growth bound allows."""

    def b(t, x, u, G):
        val = a0(t, x, u, G) if callable(a0) else np.full(len(x), float(a0))
        out = np.zeros_like(x)
        out[:, 0] = C * np.sqrt(val)
        return out

    return b


def _parabolic_coefficients(cfg):
    preset = cfg.raw("coefficients", "preset", "heat")
    if preset == "heat":
        base = p_laplace_preset(2.0)
    elif preset == "p-laplace":
        p = cfg.get("coefficients", "p", float, required=True, check=lambda p: p > 1, expect=" (p > 1)")
        eps = cfg.get("coefficients", "epsilon", float, 1e-10, check=lambda e: e >= 0)
        base = p_laplace_preset(p, eps)
    else:
        raise ConfigError(f"{cfg.where('coefficients', 'preset')}: unknown preset {preset!r}")
    C = cfg.get("coefficients", "advection", float, 0.0, check=lambda c: c >= 0)
    c = cfg.get("coefficients", "reaction", float, 0.0, check=lambda c: c >= 0)
    advection = _advection_along_x(base.a0, C) if C > 0 else None
    return ParabolicCoefficients(a0=base.a0, b=advection, c=c if c > 0 else None, C=C, p=base.p)


def _run_parabolic(cfg, tol, include_zero):
    mesh = _build_mesh(cfg, (0.0, np.pi))
    coeffs = _parabolic_coefficients(cfg)
    N = cfg.get("data", "components", int, 2, check=lambda n: 1 <= n <= 8)
    T = cfg.get("time", "T", float, required=True, check=lambda t: t > 0)
    dt = cfg.get("time", "dt", float, required=True, check=lambda d: 0 < d <= T, expect=" (0 < dt <= T)")
    initial = cfg.raw("data", "initial", "sine")
    if initial != "sine":
        raise ConfigError(f"{cfg.where('data', 'initial')}: unknown initial preset {initial!r}")
    boundary = cfg.raw("data", "boundary", "zero")
    if boundary == "zero":
        g = np.zeros(N)
    elif boundary == "constant":
        g = np.array(cfg.get("data", "boundary_value", _floats, required=True, check=lambda v: len(v) == N,
                             expect=f" (need {N} numbers)"))
    else:
        raise ConfigError(f"{cfg.where('data', 'boundary')}: unknown boundary preset {boundary!r}")
    # sine bumps on top of the boundary value, so level 0 is continuous
    u0 = g + sine_initial(mesh, N)
    traj = run(ParabolicScenario(mesh, coeffs, T, dt, u0, g))
    zero = include_zero or coeffs.c is not None
    if tol is None:
        tol = CHP_TOL if coeffs.p in (None, 2.0) else nonlinear_tolerance(u0)
    report = verify(traj, boundary_hull_parabolic(traj, zero), tol)
    return traj, report


def _write_outputs(out, data, report):
    out.mkdir(parents=True, exist_ok=True)
    if isinstance(data, Trajectory):
        dump_trajectory(data, out / "fields")
        write_eta_csv(report.eta, out / "eta.csv")
    else:
        field_to_csv(data, out / "solution.csv")
    (out / "report.json").write_text(report.to_json())


def cmd_run(args) -> int:
    cfg = Config(args.config)
    kind = cfg.get("scenario", "kind", required=True, check=lambda k: k in KINDS, expect=f" (one of {', '.join(KINDS)})")
    expect = cfg.get("scenario", "expect", str.lower, "pass", check=lambda e: e in ("pass", "fail"))
    tol = args.tolerance if args.tolerance is not None else cfg.get("verify", "tolerance", float, None)
    include_zero = args.include_zero or cfg.get("verify", "include_zero", _bool, False)
    out = Path(args.out or cfg.raw("output", "dir", "out"))
    if kind == "elliptic":
        data, report = _run_elliptic(cfg, tol)
    elif kind == "parabolic":
        data, report = _run_parabolic(cfg, tol, include_zero)
    elif kind == "counterexample-elliptic":
        ell = cfg.get("coefficients", "ell", float, 0.9, check=lambda l: 0 < l < 1, expect=" (0 < ell < 1)")
        cells = cfg.get("mesh", "cells", int, required=True, check=lambda m: m >= 2)
        data, report, _ = solve_elliptic_counterexample(ell, cells, CHP_TOL if tol is None else tol)
    elif kind == "counterexample-parabolic":
        a1 = cfg.get("coefficients", "a1", float, 1.0, check=lambda a: a > 0)
        a2 = cfg.get("coefficients", "a2", float, 2.0, check=lambda a: a > 0)
        if a1 == a2:
            raise ConfigError(f"{cfg.where('coefficients', 'a2')}: a1 and a2 must differ")
        cells = cfg.get("mesh", "cells", int, required=True, check=lambda m: m >= 2)
        T = cfg.get("time", "T", float, 1.0, check=lambda t: t > 0)
        dt = cfg.get("time", "dt", float, 1e-3, check=lambda d: 0 < d <= T)
        data, report, _ = run_parabolic_counterexample(a1, a2, cells, dt, T, CHP_TOL if tol is None else tol)
    elif kind == "verify":
        inputs = cfg.get("verify", "input", lambda s: [p.strip() for p in s.split(",")], required=True)
        base = cfg.path.parent
        data = _load_solution([str(base / p) for p in inputs])
        report = _verify_loaded(data, None, include_zero, CHP_TOL if tol is None else tol)
        _write_outputs(out, data, report)
        sys.stdout.write(report.to_json())
        return 0 if report.verdict.lower() == expect else 1
    else:
        raise ConfigError(f"{cfg.where('scenario', 'kind')}: use the 'convergence' command for convergence studies")
    _write_outputs(out, data, report)
    sys.stdout.write(report.to_json())
    return 0 if report.verdict.lower() == expect else 1


def convergence_table(sizes, errors) -> str:
    rates = eoc(sizes, errors) if len(sizes) > 1 else []
    lines = ["h_or_dt,error,eoc"]
    for k, (h, e) in enumerate(zip(sizes, errors)):
        rate = "" if k == 0 else f"{rates[k - 1]:.17g}"
        lines.append(f"{h:.17g},{e:.17g},{rate}")
    return "\n".join(lines) + "\n"


def cmd_convergence(args) -> int:
    cfg = Config(args.config)
    kind = cfg.get("scenario", "kind", required=True, check=lambda k: k in KINDS)
    target = cfg.raw("convergence", "target", kind if kind != "convergence" else None)
    if target == "counterexample-elliptic":
        levels = cfg.get("convergence", "levels", lambda s: [int(v) for v in s.split(",")], [64, 128, 256, 512],
                         check=lambda v: len(v) >= 1 and all(m >= 2 for m in v))
        ell = cfg.get("coefficients", "ell", float, 0.9, check=lambda l: 0 < l < 1)
        rows = elliptic_convergence(levels, ell)
    elif target == "heat":
        dts = cfg.get("convergence", "levels", _floats, [0.1, 0.05, 0.025, 0.0125],
                      check=lambda v: len(v) >= 1 and all(d > 0 for d in v))
        cells = cfg.get("mesh", "cells", int, 256, check=lambda m: m >= 2)
        T = cfg.get("time", "T", float, 1.0, check=lambda t: t > 0 and all(d <= t for d in dts))
        rows = heat_convergence(dts, cells, T)
    else:
        raise ConfigError(
            f"{cfg.where('convergence', 'target')}: no closed-form oracle for {target!r} "
            "(use counterexample-elliptic or heat)"
        )
    table = convergence_table([r[0] for r in rows], [r[1] for r in rows])
    out = Path(args.out or cfg.raw("output", "dir", "out"))
    out.mkdir(parents=True, exist_ok=True)
    (out / "convergence.csv").write_text(table)
    sys.stdout.write(table)
    return 0


def _load_solution(paths):
    paths = [Path(p) for p in paths]
    if len(paths) == 1 and _is_index(paths[0]):
        rows = list(csv.DictReader(io.StringIO(paths[0].read_text())))
        if not rows or set(rows[0]) != {"level", "time", "filename"}:
            raise MeshError(f"{paths[0]}:1: expected header level,time,filename")
        times, fields = [], []
        for lineno, row in enumerate(rows, start=2):
            try:
                times.append(float(row["time"]))
            except (TypeError, ValueError):
                raise MeshError(f"{paths[0]}:{lineno}: bad time {row['time']!r}") from None
            fields.append(field_from_csv(paths[0].parent / row["filename"]))
        return Trajectory(np.array(times), tuple(_on_mesh(fields)))
    fields = [field_from_csv(p) for p in paths]
    if len(fields) == 1:
        return fields[0]
    return Trajectory(np.arange(len(fields), dtype=float), tuple(_on_mesh(fields)))


def _on_mesh(fields):
    mesh = fields[0].mesh
    for f in fields[1:]:
        if f.mesh.nodes.shape != mesh.nodes.shape or not np.array_equal(f.mesh.nodes, mesh.nodes):
            raise MeshError("time levels are on different meshes")
    return [NodalField(mesh, f.values) for f in fields]


def _is_index(path):
    with open(path) as fh:
        return fh.readline().strip().replace(" ", "") == "level,time,filename"


def _load_hull(path) -> ConvexPolytope:
    rows = list(csv.reader(io.StringIO(Path(path).read_text())))
    if not rows or not all(h.strip().startswith("v_") for h in rows[0]):
        raise MeshError(f"{path}:1: expected header v_1,...,v_N")
    try:
        # re-hull: the file may list vertices in any order, or non-extreme points
        return convex_hull(np.array([[float(v) for v in r] for r in rows[1:]]))
    except ValueError as exc:
        raise MeshError(f"{path}: bad hull vertex ({exc})") from None


def _verify_loaded(data, hull, include_zero, tol):
    if hull is None:
        if isinstance(data, Trajectory):
            hull = boundary_hull_parabolic(data, include_zero)
        elif include_zero:
            hull = convex_hull(np.vstack([data.boundary_values, np.zeros((1, data.components))]))
        else:
            hull = boundary_hull_elliptic(data)
    return verify(data, hull, tol)


def cmd_verify(args) -> int:
    data = _load_solution(args.files)
    hull = _load_hull(args.hull) if args.hull else None
    report = _verify_loaded(data, hull, args.include_zero, CHP_TOL if args.tolerance is None else args.tolerance)
    if args.eta and report.eta:
        write_eta_csv(report.eta, args.eta)
    sys.stdout.write(report.to_json())
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="chplab", description="Convex hull property laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario and verify the convex hull property")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--tolerance", type=float)
    p.add_argument("--include-zero", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("convergence", help="refinement study against a closed-form solution")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("verify", help="verify dumped solution CSVs")
    p.add_argument("files", nargs="+", help="field CSV(s) or a times.csv index")
    p.add_argument("--hull", help="CSV of hull vertices (header v_1,...,v_N)")
    p.add_argument("--include-zero", action="store_true")
    p.add_argument("--tolerance", type=float)
    p.add_argument("--eta", help="write the eta series here (trajectories only)")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"chplab: error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"chplab: solver failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
