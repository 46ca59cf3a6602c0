"""Uniform grids, sampled fields, ball masks, quadrature and norms."""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass
import logging

import numpy as np

from .const import DIM, DOMAIN_BALL, DOMAIN_BOX, DOMAIN_HALF_BALL, MIN_NODES_PER_AXIS, MIN_RADIUS_CELLS, SUBCELL_OFFSETS
from .elastic import ElasticModel, summed
from .exceptions import GeometryError, InputDomainError
from .manifold import Potential

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class Grid:
    """Uniform node grid, optionally carrying a ball or half-ball domain."""

    shape: tuple[int, int, int]
    h: float
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)
    kind: str = DOMAIN_BOX
    center: tuple[float, float, float] | None = None
    radius: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "shape", tuple(int(n) for n in self.shape))
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))
        if len(self.shape) != DIM or min(self.shape) < MIN_NODES_PER_AXIS:
            raise InputDomainError("shape", self.shape, f"{DIM} axes with >= {MIN_NODES_PER_AXIS} nodes")
        if not self.h > 0:
            raise InputDomainError("h", self.h, "> 0")
        if self.kind not in (DOMAIN_BOX, DOMAIN_BALL, DOMAIN_HALF_BALL):
            raise InputDomainError("kind", self.kind, "box, ball or half_ball")
        if self.kind != DOMAIN_BOX:
            if self.center is None or self.radius is None or not self.radius > 0:
                raise InputDomainError("radius", self.radius, "ball domains need a center and a radius > 0")
            object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @classmethod
    def centered(cls, n: int, h: float, kind: str = DOMAIN_BOX, radius: float | None = None) -> Grid:
        """n^3 grid symmetric about the origin."""
        half = 0.5 * (n - 1) * h
        center = None if kind == DOMAIN_BOX else (0.0, 0.0, 0.0)
        if kind == DOMAIN_HALF_BALL:
            return cls((n, n, (n + 1) // 2), h, (-half, -half, 0.0), kind, center, radius)
        return cls((n, n, n), h, (-half, -half, -half), kind, center, radius)

    @property
    def node_volume(self) -> float:
        return self.h**DIM

    @property
    def upper(self) -> np.ndarray:
        return np.asarray(self.origin) + self.h * (np.asarray(self.shape) - 1)

    def axes(self) -> list[np.ndarray]:
        return [o + self.h * np.arange(n) for o, n in zip(self.origin, self.shape)]

    def coords(self) -> np.ndarray:
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def index_of(self, point: np.ndarray) -> tuple[int, int, int]:
        """Nearest node index of a physical point."""
        idx = np.rint((np.asarray(point, dtype=float) - np.asarray(self.origin)) / self.h).astype(int)
        if np.any(idx < 0) or np.any(idx >= np.asarray(self.shape)):
            raise GeometryError(f"Point {point} lies outside the grid")
        return tuple(int(i) for i in idx)

    def contains_ball(self, center: np.ndarray, r: float) -> bool:
        c = np.asarray(center, dtype=float)
        tol = 1e-9 * self.h
        return bool(np.all(c - r >= np.asarray(self.origin) - tol) and np.all(c + r <= self.upper + tol))

    def face_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        for axis in range(DIM):
            idx = [slice(None)] * DIM
            idx[axis] = 0
            mask[tuple(idx)] = True
            idx[axis] = -1
            mask[tuple(idx)] = True
        return mask

    def interior_mask(self) -> np.ndarray:
        """Nodes strictly inside the domain; everything else carries Dirichlet data."""
        if self.kind == DOMAIN_BOX:
            return ~self.face_mask()
        rel = self.coords() - np.asarray(self.center)
        inside = np.linalg.norm(rel, axis=-1) < self.radius - 1e-12 * self.h
        if self.kind == DOMAIN_HALF_BALL:
            inside &= rel[..., 2] > 1e-12 * self.h
        return inside & ~self.face_mask()

    def boundary_mask(self) -> np.ndarray:
        return ~self.interior_mask()

    def quadrature_weights(self) -> np.ndarray:
        """Node weights of the domain: trapezoid for boxes, partial volume for balls."""
        if self.kind == DOMAIN_BOX:
            parts = [np.ones(n) for n in self.shape]
            for p in parts:
                p[0] = p[-1] = 0.5
            return np.einsum("i,j,k->ijk", *parts)
        return BallMask.build(self, self.center, self.radius, half=self.kind == DOMAIN_HALF_BALL).weights


@dataclass
class Field:
    """Node values u: grid -> R^k with the nodes constrained by Dirichlet data."""

    grid: Grid
    values: np.ndarray
    boundary_mask: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        self.boundary_mask = np.asarray(self.boundary_mask, dtype=bool)
        if self.values.shape[:DIM] != self.grid.shape or self.values.ndim != DIM + 1:
            raise GeometryError(f"Values of shape {self.values.shape} do not match grid {self.grid.shape}")
        if self.boundary_mask.shape != self.grid.shape:
            raise GeometryError(f"Boundary mask of shape {self.boundary_mask.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise InputDomainError("values", "non-finite", "finite at every node")

    @classmethod
    def from_function(cls, grid: Grid, func: Callable[[np.ndarray], np.ndarray], boundary_mask: np.ndarray | None = None) -> Field:
        mask = grid.boundary_mask() if boundary_mask is None else boundary_mask
        return cls(grid, func(grid.coords()), mask)

    @property
    def k(self) -> int:
        return self.values.shape[-1]

    def with_values(self, values: np.ndarray) -> Field:
        return Field(self.grid, values, self.boundary_mask.copy())

    def copy(self) -> Field:
        return Field(self.grid, self.values.copy(), self.boundary_mask.copy())


@dataclass
class BallMask:
    """Partial-volume node weights of a ball or half-ball."""

    center: np.ndarray
    radius: float
    weights: np.ndarray

    @classmethod
    def build(cls, grid: Grid, center: np.ndarray, radius: float, half: bool = False) -> BallMask:
        """Fraction of the 8 subcell points of each node cell inside the ball (above the flat face when half)."""
        c = np.asarray(center, dtype=float)
        x = grid.coords() - c
        weights = np.zeros(grid.shape)
        offsets = [o * grid.h for o in SUBCELL_OFFSETS]
        for dx in offsets:
            for dy in offsets:
                for dz in offsets:
                    p = x + np.array([dx, dy, dz])
                    inside = np.sum(p * p, axis=-1) <= radius * radius
                    if half:
                        inside &= p[..., 2] >= 0.0
                    weights += inside
        return cls(c, float(radius), weights / 8.0)

    def volume(self, h: float) -> float:
        return float(np.sum(self.weights)) * h**DIM


def ball_volume(radius: float) -> float:
    return 4.0 / 3.0 * np.pi * radius**3


@dataclass
class EnergyBreakdown:
    """Elastic part, potential part and total E = elastic + potential / eps^2."""

    elastic: float
    potential: float
    total: float


def _mask_weights(field: Field, mask: BallMask | np.ndarray | None) -> np.ndarray:
    if mask is None:
        return field.grid.quadrature_weights()
    weights = mask.weights if isinstance(mask, BallMask) else np.asarray(mask, dtype=float)
    if weights.shape != field.grid.shape:
        raise GeometryError(f"Mask of shape {weights.shape} does not match grid {field.grid.shape}")
    return weights


def gradient(field: Field) -> np.ndarray:
    """Nodal gradient shaped (nx, ny, nz, k, 3); central inside, one-sided on the faces."""
    parts = np.gradient(field.values, field.grid.h, axis=(0, 1, 2))
    return np.stack(parts, axis=-1)


def energy_density(field: Field, elastic: ElasticModel) -> np.ndarray:
    density = elastic.density(gradient(field))
    return density if elastic.weight is None else elastic.weight * density


def energy(
    field: Field,
    epsilon: float,
    elastic: ElasticModel,
    potential: Potential,
    mask: BallMask | np.ndarray | None = None,
    deterministic: bool = False,
) -> EnergyBreakdown:
    """Midpoint quadrature of int W(x, grad u) + f(u) / eps^2 over the mask."""
    if not epsilon > 0:
        raise InputDomainError("epsilon", epsilon, "> 0")
    w = _mask_weights(field, mask) * field.grid.node_volume
    el = summed(w * energy_density(field, elastic), deterministic)
    pot = summed(w * potential.f(field.values), deterministic)
    return EnergyBreakdown(el, pot, el + pot / epsilon**2)


def renormalized_energy(
    field: Field,
    epsilon: float,
    elastic: ElasticModel,
    potential: Potential,
    center: np.ndarray,
    r: float,
    deterministic: bool = False,
) -> float:
    """r^(2-n) E_eps(u; B_r(center)) with n = 3."""
    grid = field.grid
    if r < MIN_RADIUS_CELLS * grid.h:
        raise GeometryError(f"Radius {r:.4g} under-resolved: needs r >= {MIN_RADIUS_CELLS}h = {MIN_RADIUS_CELLS * grid.h:.4g}")
    if not grid.contains_ball(center, r):
        raise GeometryError(f"Ball B_{r:.4g}({tuple(center)}) exits the grid")
    mask = BallMask.build(grid, center, r)
    return energy(field, epsilon, elastic, potential, mask, deterministic).total / r


def _check_same_grid(f1: Field, f2: Field) -> None:
    if f1.grid != f2.grid or f1.values.shape != f2.values.shape:
        raise GeometryError(f"Grid mismatch: {f1.grid.shape} vs {f2.grid.shape}")


def h1_distance(f1: Field, f2: Field, mask: BallMask | np.ndarray | None = None) -> float:
    """Discrete H1 norm (gradient seminorm plus L2 norm) of f1 - f2."""
    _check_same_grid(f1, f2)
    diff = f1.with_values(f1.values - f2.values)
    w = _mask_weights(f1, mask) * f1.grid.node_volume
    grad = gradient(diff)
    return float(np.sqrt(np.sum(w * (np.sum(grad * grad, axis=(-2, -1)) + np.sum(diff.values**2, axis=-1)))))


def linf_distance(f1: Field, f2: Field, mask: BallMask | np.ndarray | None = None) -> float:
    _check_same_grid(f1, f2)
    w = _mask_weights(f1, mask)
    d = np.linalg.norm(f1.values - f2.values, axis=-1)
    return float(np.max(d[w > 0], initial=0.0))
