"""End-to-end rigidity experiments.

The rigidity theorems say constant Neumann data on the outer boundary forces
the spherical sector; the lab makes that quantitative by scanning the
length-weighted spread sigma of the measured Neumann data against domain
perturbations, together with the matrix/Hessian defects the proofs pivot on.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .identities import identity_suite
from .mesh import BoundaryRadius, build_grid
from .oracles import (
    RadialSolutionEuclidean,
    RadialSolutionSpaceForm,
    overdetermined_constant,
    sample_values,
)
from .pfunction import hessian_proportionality_defect, pfunction_suite
from .profiles import profile_from_id
from .solver import (
    hessian_W_field,
    interior_cell_mask,
    normal_derivative_gamma0,
    solve_Lf,
    solve_linear_spaceform,
)
from .spaceforms import ConeSection, space_form_from_id

__all__ = [
    "ExperimentConfig",
    "RigidityRow",
    "RigidityReport",
    "deviation_scan",
    "convexity_contrast",
    "convergence_study",
    "thread_budget",
]

DEFAULT_EPSILONS = (0.0, 0.05, 0.1, 0.2)


def thread_budget() -> int:
    """Parallelism cap from SERRIN_THREADS (default 1: fully serial runs)."""
    raw = os.environ.get("SERRIN_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _parse_grid(spec) -> tuple:
    if isinstance(spec, (tuple, list)) and len(spec) == 2:
        return int(spec[0]), int(spec[1])
    parts = str(spec).lower().split("x")
    if len(parts) != 2:
        raise ValueError(f"grid spec must look like '64x64', got {spec!r}")
    return int(parts[0]), int(parts[1])


@dataclass(frozen=True)
class ExperimentConfig:
    space_form: str = "euclidean"
    profile: str = "laplacian"
    alpha: float = math.pi / 2
    R0: float = 1.0
    epsilons: tuple = DEFAULT_EPSILONS
    k: int = 2
    grids: tuple = ("64x64",)
    tol: float = 1e-8
    omega: float | None = None
    out_dir: str = "."

    def __post_init__(self):
        space_form_from_id(self.space_form)  # validates
        profile_from_id(self.profile)
        if not 0.0 < self.alpha <= 2.0 * math.pi:
            raise ValueError(f"alpha must lie in (0, 2*pi], got {self.alpha}")
        if not self.R0 > 0:
            raise ValueError("R0 must be positive")
        object.__setattr__(self, "epsilons", tuple(float(e) for e in self.epsilons))
        if any(e < 0 or e >= 1 for e in self.epsilons):
            raise ValueError("epsilon values must lie in [0, 1)")
        if self.k < 1:
            raise ValueError("perturbation mode k must be positive")
        object.__setattr__(self, "grids", tuple(f"{a}x{b}" for a, b in map(_parse_grid, self.grids)))
        sizes = [_parse_grid(g) for g in self.grids]
        if any(s2 <= s1 for (s1, _), (s2, _) in zip(sizes, sizes[1:])):
            raise ValueError("grid list must be strictly increasing")
        if self.space_form != "euclidean" and self.profile != "laplacian":
            raise ValueError("space-form runs use the linear operator; profile must be 'laplacian'")
        if not self.tol > 0:
            raise ValueError("tol must be positive")

    @property
    def grid_sizes(self) -> list:
        return [_parse_grid(g) for g in self.grids]

    def to_dict(self) -> dict:
        return {
            "space_form": self.space_form,
            "profile": self.profile,
            "alpha": self.alpha,
            "R0": self.R0,
            "epsilons": list(self.epsilons),
            "k": self.k,
            "grids": list(self.grids),
            "tol": self.tol,
            "omega": self.omega,
            "out_dir": self.out_dir,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)


@dataclass
class RigidityRow:
    epsilon: float
    sigma: float
    sigma_max: float
    c_mean: float
    c_formula: float
    defect: float
    audit_pass_rate: float
    converged: bool

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "sigma": self.sigma,
            "sigma_max": self.sigma_max,
            "c_mean": self.c_mean,
            "c_formula": self.c_formula,
            "defect": self.defect,
            "audit_pass_rate": self.audit_pass_rate,
            "converged": self.converged,
        }


@dataclass
class RigidityReport:
    config: ExperimentConfig
    grid: str
    rows: list = field(default_factory=list)
    judged: bool = True

    @property
    def sigma_strictly_increasing(self) -> bool:
        sig = [r.sigma for r in self.rows if r.converged]
        return all(a < b for a, b in zip(sig, sig[1:]))

    @property
    def passed(self) -> bool:
        if not self.judged:
            return True
        return (
            all(r.converged for r in self.rows)
            and self.sigma_strictly_increasing
            and all(r.audit_pass_rate == 1.0 for r in self.rows)
        )

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "grid": self.grid,
            "rows": [r.to_dict() for r in self.rows],
            "judged": self.judged,
            "sigma_strictly_increasing": self.sigma_strictly_increasing,
            "passed": self.passed,
        }


def _solve_on(grid, config: ExperimentConfig):
    profile = profile_from_id(config.profile)
    if grid.cone.space_form.curvature != 0:
        return solve_linear_spaceform(grid, 2)
    return solve_Lf(grid, profile, tol=config.tol, omega=config.omega)


def _sigma_stats(grid, u):
    dn = -normal_derivative_gamma0(grid, u.values)
    w = grid.gamma0_weights
    mean = float(np.sum(w * dn) / np.sum(w))
    sigma = float(np.sqrt(np.sum(w * (dn - mean) ** 2) / np.sum(w)))
    sigma_max = float(np.max(np.abs(dn - mean)))
    return mean, sigma, sigma_max


def _scan_one(config: ExperimentConfig, size, eps: float) -> RigidityRow:
    sf = space_form_from_id(config.space_form)
    cone = ConeSection(sf, config.alpha)
    grid = build_grid(cone, size[0], size[1], BoundaryRadius(config.R0, eps, config.k))
    u, rep = _solve_on(grid, config)
    if not rep.converged:
        return RigidityRow(eps, float("nan"), float("nan"), float("nan"), float("nan"),
                           float("nan"), 0.0, False)
    profile = profile_from_id(config.profile)
    c_mean, sigma, sigma_max = _sigma_stats(grid, u)
    if sf.curvature == 0:
        area = float(np.sum(grid.area_weights))
        length = float(np.sum(grid.gamma0_weights))
        c_formula = float(profile.g_prime(area / length))
        W = hessian_W_field(grid, u.values, profile)
        keep = interior_cell_mask(grid) & ~W.mask
        defect = float(np.max(np.abs((W.values + np.eye(2) / 2.0)[keep])))
        audit = identity_suite(grid, u, profile, W=W)
        rate = audit.pass_rate
    else:
        ref = RadialSolutionSpaceForm(sf, 2, config.R0)
        c_formula = overdetermined_constant(ref)
        defect = hessian_proportionality_defect(grid, u)
        pf = pfunction_suite(grid, u)
        verdicts = list(pf.verdicts.values())
        rate = sum(verdicts) / len(verdicts)
    return RigidityRow(eps, sigma, sigma_max, c_mean, c_formula, defect, rate, True)


def deviation_scan(config: ExperimentConfig, judged: bool = True) -> RigidityReport:
    """Solve/audit across the epsilon ladder on the primary grid.

    Solver non-convergence is recorded per row without aborting the scan.
    Independent epsilon cases may run on a small thread pool (SERRIN_THREADS);
    rows are assembled in ladder order either way.
    """
    size = config.grid_sizes[0]
    workers = min(thread_budget(), max(1, len(config.epsilons)))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda e: _scan_one(config, size, e), config.epsilons))
    else:
        rows = [_scan_one(config, size, e) for e in config.epsilons]
    return RigidityReport(config=config, grid=config.grids[0], rows=rows, judged=judged)


def convexity_contrast(config: ExperimentConfig) -> RigidityReport:
    """Same scan over a reflex (nonconvex) section; exploratory, no contracts."""
    if config.alpha <= math.pi:
        raise ValueError("convexity contrast needs alpha > pi")
    return deviation_scan(config, judged=False)


def convergence_study(config: ExperimentConfig):
    """Errors and Richardson orders against the radial oracle over dyadic grids.

    Requires epsilon = 0 (otherwise no closed-form reference exists) and at
    least three strictly dyadic levels.
    """
    sizes = config.grid_sizes
    if len(sizes) < 3:
        raise ValueError("convergence study needs at least three grid levels")
    for (a1, b1), (a2, b2) in zip(sizes, sizes[1:]):
        if (a2, b2) != (2 * a1, 2 * b1):
            raise ValueError("convergence study grids must double each level")
    sf = space_form_from_id(config.space_form)
    profile = profile_from_id(config.profile)
    cone = ConeSection(sf, config.alpha)
    if sf.curvature == 0:
        oracle = RadialSolutionEuclidean(profile, 2, config.R0)
    else:
        oracle = RadialSolutionSpaceForm(sf, 2, config.R0)

    rows = []
    prev = None
    for size in sizes:
        grid = build_grid(cone, size[0], size[1], BoundaryRadius(config.R0, 0.0, config.k))
        u, rep = _solve_on(grid, config)
        exact = sample_values(oracle, grid)
        diff = u.values - exact
        err_inf = float(np.max(np.abs(diff)))
        w = grid.area_weights
        err_l2 = float(np.sqrt(np.sum(diff * diff * w) / np.sum(w)))
        h = config.R0 / size[0]
        row = {
            "grid": f"{size[0]}x{size[1]}",
            "h": h,
            "err_inf": err_inf,
            "err_l2": err_l2,
            "order_inf": float("nan") if prev is None else math.log2(prev["err_inf"] / err_inf),
            "order_l2": float("nan") if prev is None else math.log2(prev["err_l2"] / err_l2),
            "converged": rep.converged,
        }
        rows.append(row)
        prev = row
    return rows