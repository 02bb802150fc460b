"""Boundary-fitted curvilinear grid over a sector-like domain.

The domain is {(r, theta): 0 < r < R(theta), 0 < theta < alpha} in a model
space.  Cells are centered in the scaled radial coordinate s = r/R(theta) and
in theta, so the vertex r = 0 is never a node and the outer Dirichlet curve
passes exactly through the last cell face.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

from .spaceforms import ConeSection

__all__ = [
    "BoundaryTag",
    "BoundaryRadius",
    "GridFace",
    "SectorGrid",
    "build_grid",
    "boundary_measures",
    "outward_normal",
]


class BoundaryTag(Enum):
    GAMMA0 = "gamma0"  # outer curve r = R(theta): Dirichlet
    GAMMA1 = "gamma1"  # walls theta in {0, alpha}: Neumann


@dataclass(frozen=True)
class BoundaryRadius:
    """Radius family R(theta) = R0 (1 + eps cos(k theta)) with derivatives."""

    R0: float
    epsilon: float = 0.0
    k: int = 2

    def __post_init__(self):
        if not self.R0 > 0:
            raise ValueError("R0 must be positive")
        if self.epsilon < 0 or self.epsilon >= 1.0:
            raise ValueError("perturbation amplitude must lie in [0, 1)")
        if self.k < 1:
            raise ValueError("perturbation mode k must be a positive integer")

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        return self.R0 * (1.0 + self.epsilon * np.cos(self.k * theta))

    def derivative(self, theta):
        theta = np.asarray(theta, dtype=float)
        return -self.R0 * self.epsilon * self.k * np.sin(self.k * theta)

    def second_derivative(self, theta):
        theta = np.asarray(theta, dtype=float)
        return -self.R0 * self.epsilon * self.k * self.k * np.cos(self.k * theta)

    @property
    def max_radius(self) -> float:
        return self.R0 * (1.0 + self.epsilon)


class GridFace(NamedTuple):
    tag: BoundaryTag
    index: int  # GAMMA0: angular column j; GAMMA1: radial cell i
    side: int = 0  # GAMMA1 only: 0 = wall theta=0, 1 = wall theta=alpha


@dataclass
class SectorGrid:
    """Cell-centered (s, theta) grid with metric factors and quadrature weights.

    Immutable after build; all arrays are shaped (Nr, Nt) or per-column.
    """

    cone: ConeSection
    Nr: int
    Nt: int
    radius: BoundaryRadius
    ds: float = field(init=False)
    dtheta: float = field(init=False)
    s_centers: np.ndarray = field(init=False)
    theta_centers: np.ndarray = field(init=False)
    theta_faces: np.ndarray = field(init=False)
    R_centers: np.ndarray = field(init=False)
    Rp_centers: np.ndarray = field(init=False)
    R_faces: np.ndarray = field(init=False)
    Rp_faces: np.ndarray = field(init=False)
    dr: np.ndarray = field(init=False)
    r_centers: np.ndarray = field(init=False)
    h_centers: np.ndarray = field(init=False)
    area_weights: np.ndarray = field(init=False)
    gamma0_weights: np.ndarray = field(init=False)
    gamma0_normals: np.ndarray = field(init=False)

    def __post_init__(self):
        cone, Nr, Nt = self.cone, self.Nr, self.Nt
        sf = cone.space_form
        self.ds = 1.0 / Nr
        self.dtheta = cone.alpha / Nt
        self.s_centers = (np.arange(Nr) + 0.5) * self.ds
        self.theta_centers = (np.arange(Nt) + 0.5) * self.dtheta
        self.theta_faces = np.arange(Nt + 1) * self.dtheta
        self.R_centers = self.radius(self.theta_centers)
        self.Rp_centers = self.radius.derivative(self.theta_centers)
        self.R_faces = self.radius(self.theta_faces)
        self.Rp_faces = self.radius.derivative(self.theta_faces)
        self.dr = self.R_centers * self.ds
        self.r_centers = self.s_centers[:, None] * self.R_centers[None, :]
        self.h_centers = sf.h(self.r_centers)
        self.area_weights = self.h_centers * self.dr[None, :] * self.dtheta
        hR = sf.h(self.R_centers)
        norm = np.sqrt(self.Rp_centers**2 + hR**2)
        self.gamma0_weights = norm * self.dtheta
        self.gamma0_normals = np.stack([hR / norm, -self.Rp_centers / norm], axis=1)

    @property
    def n_cells(self) -> int:
        return self.Nr * self.Nt

    def gamma1_weights(self, side: int) -> np.ndarray:
        """Per-cell wall face lengths along theta=0 (side 0) or theta=alpha."""
        theta_wall = 0.0 if side == 0 else self.cone.alpha
        return np.full(self.Nr, float(self.radius(theta_wall)) * self.ds)

    def gamma0_faces(self):
        return [GridFace(BoundaryTag.GAMMA0, j) for j in range(self.Nt)]

    def gamma1_faces(self):
        return [
            GridFace(BoundaryTag.GAMMA1, i, side)
            for side in (0, 1)
            for i in range(self.Nr)
        ]

    def grid_hash(self) -> str:
        payload = hashlib.sha256()
        payload.update(
            f"{self.cone.space_form.name}|{self.cone.alpha!r}|{self.Nr}|{self.Nt}|"
            f"{self.radius.R0!r}|{self.radius.epsilon!r}|{self.radius.k}".encode()
        )
        payload.update(self.r_centers.tobytes())
        return payload.hexdigest()


def build_grid(
    cone: ConeSection,
    Nr: int,
    Nt: int,
    boundary_radius: BoundaryRadius | None = None,
    R0: float = 1.0,
) -> SectorGrid:
    """Build a sector grid; the default boundary is the constant radius R0."""
    if Nr < 8 or Nt < 8:
        raise ValueError("grid needs at least 8 cells per direction")
    radius = boundary_radius if boundary_radius is not None else BoundaryRadius(R0)
    if radius.max_radius >= cone.space_form.r_max:
        raise ValueError(
            f"boundary radius {radius.max_radius} exceeds the radial interval "
            f"of {cone.space_form.name}"
        )
    return SectorGrid(cone=cone, Nr=Nr, Nt=Nt, radius=radius)


def boundary_measures(grid: SectorGrid):
    """Quadrature of the domain area and the Gamma_0 arc length.

    The arc element for r = R(theta) in the metric dr^2 + h^2 dtheta^2 is
    sqrt(R'(theta)^2 + h(R(theta))^2) dtheta.
    """
    return float(np.sum(grid.area_weights)), float(np.sum(grid.gamma0_weights))


def gamma1_total_length(grid: SectorGrid) -> float:
    return float(np.sum(grid.gamma1_weights(0)) + np.sum(grid.gamma1_weights(1)))


def outward_normal(grid: SectorGrid, face: GridFace) -> np.ndarray:
    """Unit outward normal in the orthonormal (radial, angular) frame.

    Walls are pure angular directions, so the radial position field X = h d_r
    satisfies g(X, nu) = 0 there exactly.
    """
    if face.tag is BoundaryTag.GAMMA1:
        return np.array([0.0, -1.0]) if face.side == 0 else np.array([0.0, 1.0])
    return grid.gamma0_normals[face.index].copy()
