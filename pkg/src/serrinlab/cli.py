"""Command-line front end: oracle | solve | audit | pfunction | rigidity | convergence.

One concern per subcommand, composable through files: solvers emit solution
CSVs, auditors consume them, so every audit can also run on oracle fields
with no solver in the loop.  Exit codes: 0 all audits pass, 2 audit failures,
3 solver non-convergence, 4 config error.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np

from .identities import identity_suite
from .mesh import BoundaryRadius, build_grid
from .oracles import (
    RadialSolutionEuclidean,
    RadialSolutionSpaceForm,
    overdetermined_constant,
    euclid_u,
    euclid_u_prime,
    pde_residual_euclid,
    pde_residual_spaceform,
    spaceform_u,
    spaceform_u_prime,
)
from .pfunction import pfunction_suite
from .profiles import profile_from_id
from .reports import ConfigError, RunManifest, emit_csv, emit_json, parse_config
from .rigidity import (
    ExperimentConfig,
    convergence_study,
    convexity_contrast,
    deviation_scan,
)
from .solver import ScalarField, solve_Lf, solve_linear_spaceform
from .spaceforms import ConeSection, space_form_from_id

EXIT_OK = 0
EXIT_AUDIT_FAIL = 2
EXIT_NO_CONVERGENCE = 3
EXIT_CONFIG = 4


def _load_config(args) -> ExperimentConfig:
    overrides = {}
    for key in ("space_form", "profile", "alpha", "R0", "k", "tol", "omega", "out_dir"):
        val = getattr(args, key, None)
        if val is not None:
            overrides[key] = val
    if getattr(args, "eps", None) is not None:
        overrides["epsilons"] = [args.eps]
    if getattr(args, "grid", None) is not None:
        overrides["grids"] = [args.grid]
    if args.config:
        base = parse_config(Path(args.config).read_text(encoding="utf-8"))
        if overrides:
            base = ExperimentConfig.from_dict({**base.to_dict(), **overrides})
        return base
    return ExperimentConfig.from_dict(overrides)


def _grid_from_config(cfg: ExperimentConfig, size=None):
    sf = space_form_from_id(cfg.space_form)
    cone = ConeSection(sf, cfg.alpha)
    nr, nt = size if size is not None else cfg.grid_sizes[0]
    eps = cfg.epsilons[0] if cfg.epsilons else 0.0
    return build_grid(cone, nr, nt, BoundaryRadius(cfg.R0, eps, cfg.k))


def _write_solution_csv(path, grid, field):
    rows = []
    for i in range(grid.Nr):
        for j in range(grid.Nt):
            rows.append((grid.r_centers[i, j], grid.theta_centers[j], field.values[i, j]))
    emit_csv(path, ["r", "theta", "u"], rows)


def _read_solution_csv(path, grid) -> ScalarField:
    lines = Path(path).read_text(encoding="utf-8").strip().splitlines()
    if not lines or lines[0].strip() != "r,theta,u":
        raise ConfigError(f"{path}: expected header 'r,theta,u'")
    body = lines[1:]
    if len(body) != grid.n_cells:
        raise ConfigError(
            f"{path}: {len(body)} rows do not match the {grid.Nr}x{grid.Nt} grid"
        )
    vals = np.empty((grid.Nr, grid.Nt))
    k = 0
    for i in range(grid.Nr):
        for j in range(grid.Nt):
            r_s, t_s, u_s = body[k].split(",")
            if abs(float(r_s) - grid.r_centers[i, j]) > 1e-9 * (1 + grid.r_centers[i, j]):
                raise ConfigError(f"{path}: row {k + 2} radius does not match the grid spec")
            if abs(float(t_s) - grid.theta_centers[j]) > 1e-9 * (1 + grid.theta_centers[j]):
                raise ConfigError(f"{path}: row {k + 2} angle does not match the grid spec")
            vals[i, j] = float(u_s)
            k += 1
    return ScalarField(grid, vals)


def _cmd_oracle(args) -> int:
    sf = space_form_from_id(args.space_form)
    profile = profile_from_id(args.profile)
    if sf.curvature == 0:
        sol = RadialSolutionEuclidean(profile, args.N, args.R)
    else:
        if not profile.is_laplacian:
            raise ConfigError("space-form oracles are linear; use --profile laplacian")
        sol = RadialSolutionSpaceForm(sf, args.N, args.R)
    c = overdetermined_constant(sol)
    d = (np.arange(args.samples) + 0.5) * args.R / args.samples
    rows = []
    for dk in d:
        if sf.curvature == 0:
            u = float(euclid_u(sol, dk))
            up = float(euclid_u_prime(sol, dk))
            res = pde_residual_euclid(sol, (dk, 0.0))
        else:
            u = float(spaceform_u(sol, dk))
            up = float(spaceform_u_prime(sol, dk))
            res = pde_residual_spaceform(sol, dk)
        rows.append((dk, u, up, res, c))
    header = ["d", "u", "u_prime", "residual", "c"]
    if args.out_dir is None:
        from .reports import _render

        print(",".join(header))
        for row in rows:
            print(",".join(_render(v) for v in row))
        return EXIT_OK
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    csv_path = emit_csv(out_dir / "oracle.csv", header, rows)
    RunManifest(
        subcommand="oracle",
        config={
            "space_form": args.space_form,
            "profile": args.profile,
            "N": args.N,
            "R": args.R,
            "samples": args.samples,
        },
        timing_seconds=time.perf_counter() - t0,
        outputs=[csv_path.name],
    ).write(out_dir / "oracle.manifest.json")
    return EXIT_OK


def _cmd_solve(args) -> int:
    cfg = _load_config(args)
    t0 = time.perf_counter()
    grid = _grid_from_config(cfg)
    profile = profile_from_id(cfg.profile)
    if grid.cone.space_form.curvature != 0:
        field, report = solve_linear_spaceform(grid, 2)
    else:
        field, report = solve_Lf(grid, profile, tol=cfg.tol, omega=cfg.omega)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_solution_csv(out_dir / "solution.csv", grid, field)
    emit_json(out_dir / "solve_report.json", {**report.to_dict(), "manifest": "solve.manifest.json"})
    RunManifest(
        subcommand="solve",
        config=cfg.to_dict(),
        grid_hash=grid.grid_hash(),
        timing_seconds=time.perf_counter() - t0,
        outputs=["solution.csv", "solve_report.json"],
    ).write(out_dir / "solve.manifest.json")
    return EXIT_OK if report.converged else EXIT_NO_CONVERGENCE


def _cmd_audit(args) -> int:
    cfg = _load_config(args)
    if cfg.space_form != "euclidean":
        raise ConfigError("identity audits are Euclidean; use the pfunction subcommand for space forms")
    t0 = time.perf_counter()
    grid = _grid_from_config(cfg)
    field = _read_solution_csv(args.solution, grid)
    report = identity_suite(grid, field, profile_from_id(cfg.profile))
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    emit_json(out_dir / "audit_report.json", {**report.to_dict(), "manifest": "audit.manifest.json"})
    rows = [
        (c.name, c.value, "" if c.tolerance is None else c.tolerance,
         "" if c.passed is None else c.passed)
        for c in report.checks
    ]
    emit_csv(out_dir / "audit_report.csv", ["name", "value", "tolerance", "passed"], rows)
    RunManifest(
        subcommand="audit",
        config=cfg.to_dict(),
        grid_hash=grid.grid_hash(),
        timing_seconds=time.perf_counter() - t0,
        outputs=["audit_report.json", "audit_report.csv"],
    ).write(out_dir / "audit.manifest.json")
    return EXIT_OK if report.passed else EXIT_AUDIT_FAIL


def _cmd_pfunction(args) -> int:
    cfg = _load_config(args)
    t0 = time.perf_counter()
    grid = _grid_from_config(cfg)
    field = _read_solution_csv(args.solution, grid)
    report = pfunction_suite(grid, field)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    emit_json(out_dir / "pfunction_report.json", {**report.to_dict(), "manifest": "pfunction.manifest.json"})
    RunManifest(
        subcommand="pfunction",
        config=cfg.to_dict(),
        grid_hash=grid.grid_hash(),
        timing_seconds=time.perf_counter() - t0,
        outputs=["pfunction_report.json"],
    ).write(out_dir / "pfunction.manifest.json")
    return EXIT_OK if report.passed else EXIT_AUDIT_FAIL


def _cmd_rigidity(args) -> int:
    cfg = _load_config(args)
    t0 = time.perf_counter()
    if cfg.alpha > math.pi:
        report = convexity_contrast(cfg)
    else:
        report = deviation_scan(cfg)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    emit_json(out_dir / "rigidity_report.json", {**report.to_dict(), "manifest": "rigidity.manifest.json"})
    rows = [
        (r.epsilon, r.sigma, r.c_mean, r.c_formula, r.defect, r.audit_pass_rate == 1.0 and r.converged)
        for r in report.rows
    ]
    emit_csv(
        out_dir / "rigidity_report.csv",
        ["epsilon", "sigma", "c_mean", "c_formula", "defect", "pass"],
        rows,
    )
    RunManifest(
        subcommand="rigidity",
        config=cfg.to_dict(),
        timing_seconds=time.perf_counter() - t0,
        outputs=["rigidity_report.json", "rigidity_report.csv"],
    ).write(out_dir / "rigidity.manifest.json")
    if any(not r.converged for r in report.rows):
        return EXIT_NO_CONVERGENCE
    return EXIT_OK if report.passed else EXIT_AUDIT_FAIL


def _cmd_convergence(args) -> int:
    cfg = _load_config(args)
    t0 = time.perf_counter()
    rows = convergence_study(cfg)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    emit_json(out_dir / "convergence_report.json", {"rows": rows, "manifest": "convergence.manifest.json"})
    emit_csv(
        out_dir / "convergence_report.csv",
        ["grid", "h", "err_inf", "err_l2", "order_inf", "order_l2"],
        [(r["grid"], r["h"], r["err_inf"], r["err_l2"], r["order_inf"], r["order_l2"]) for r in rows],
    )
    RunManifest(
        subcommand="convergence",
        config=cfg.to_dict(),
        timing_seconds=time.perf_counter() - t0,
        outputs=["convergence_report.json", "convergence_report.csv"],
    ).write(out_dir / "convergence.manifest.json")
    if any(not r["converged"] for r in rows):
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def _add_config_flags(p, with_eps_grid=True):
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--space-form", dest="space_form", choices=["euclidean", "hyperbolic", "sphere"])
    p.add_argument("--profile")
    p.add_argument("--alpha", type=float)
    p.add_argument("--R0", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--omega", type=float)
    p.add_argument("--out-dir", dest="out_dir")
    if with_eps_grid:
        p.add_argument("--eps", type=float)
        p.add_argument("--k", type=int)
        p.add_argument("--grid")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="serrinlab",
        description="Numerical lab for overdetermined torsion problems on cone sectors",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("oracle", help="closed-form radial solution tables")
    p.add_argument("--space-form", dest="space_form", default="euclidean",
                   choices=["euclidean", "hyperbolic", "sphere"])
    p.add_argument("--profile", default="laplacian")
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--R", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--out-dir", dest="out_dir", default=None,
                   help="write oracle.csv here instead of printing to stdout")
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("solve", help="mixed boundary value solve on a sector grid")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("audit", help="Euclidean identity audits of a solution CSV")
    _add_config_flags(p)
    p.add_argument("--solution", required=True)
    p.set_defaults(func=_cmd_audit)

    p = sub.add_parser("pfunction", help="space-form P-function audits of a solution CSV")
    _add_config_flags(p)
    p.add_argument("--solution", required=True)
    p.set_defaults(func=_cmd_pfunction)

    p = sub.add_parser("rigidity", help="deviation scan over the epsilon ladder")
    _add_config_flags(p, with_eps_grid=False)
    p.add_argument("--k", type=int)
    p.add_argument("--grid")
    p.set_defaults(func=_cmd_rigidity)

    p = sub.add_parser("convergence", help="refinement study against the radial oracle")
    _add_config_flags(p, with_eps_grid=False)
    p.set_defaults(func=_cmd_convergence)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())