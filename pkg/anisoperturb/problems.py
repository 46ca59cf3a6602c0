"""Boundary data, initial guesses and the standard experiment problems."""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass
import logging

import numpy as np

from .const import (
    ANCHORING_DIRICHLET,
    ANCHORING_FREE,
    ANCHORING_WEAK,
    DATA_HEDGEHOG,
    DATA_ROTATING,
    DATA_UNIFORM,
    INIT_DATA,
    INIT_RADIAL,
)
from .exceptions import InputDomainError
from .field import Field, Grid
from .manifold import Potential
from .solver import AnchoringSpec

_LOGGER = logging.getLogger(__name__)

DataFunction = Callable[[np.ndarray], np.ndarray]


def _unit(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise InputDomainError("director", v.tolist(), "nonzero")
    return v / norm


def hedgehog(potential: Potential, center: np.ndarray | None = None) -> DataFunction:
    """Radial map x/|x| into N (s* n x n for LdG), zero at the center itself."""
    c = np.zeros(3) if center is None else np.asarray(center, dtype=float)

    def func(x: np.ndarray) -> np.ndarray:
        rel = x - c
        norm = np.linalg.norm(rel, axis=-1, keepdims=True)
        at_center = norm[..., 0] == 0.0
        n = np.where(norm > 0, rel / np.where(norm > 0, norm, 1.0), np.array([0.0, 0.0, 1.0]))
        values = potential.vacuum_points(n)
        values[at_center] = 0.0
        return values

    return func


def uniform(potential: Potential, director: np.ndarray = (0.0, 0.0, 1.0)) -> DataFunction:
    point = potential.vacuum_points(_unit(director))

    def func(x: np.ndarray) -> np.ndarray:
        return np.broadcast_to(point, (*x.shape[:-1], potential.k)).copy()

    return func


def rotating(potential: Potential, kappa: float, axis: int = 2) -> DataFunction:
    """Director twisting about the axis at wavenumber kappa; |grad u|^2 = kappa^2 (GL) or 2 s*^2 kappa^2 (LdG)."""

    def func(x: np.ndarray) -> np.ndarray:
        angle = kappa * x[..., axis]
        n = np.zeros(x.shape)
        n[..., (axis + 1) % 3] = np.cos(angle)
        n[..., (axis + 2) % 3] = np.sin(angle)
        return potential.vacuum_points(n)

    return func


def boundary_data(kind: str, potential: Potential, director: np.ndarray = (0.0, 0.0, 1.0), kappa: float = 0.0) -> DataFunction:
    if kind == DATA_HEDGEHOG:
        return hedgehog(potential)
    if kind == DATA_UNIFORM:
        return uniform(potential, director)
    if kind == DATA_ROTATING:
        return rotating(potential, kappa)
    raise InputDomainError("data", kind, f"one of {DATA_HEDGEHOG}, {DATA_UNIFORM}, {DATA_ROTATING}")


def radial_initial(grid: Grid, data: DataFunction) -> np.ndarray:
    """Data scaled by |x - c| / R inside the domain, so the guess vanishes at the center."""
    coords = grid.coords()
    center = np.asarray(grid.center if grid.center is not None else 0.5 * (np.asarray(grid.origin) + grid.upper))
    radius = grid.radius if grid.radius is not None else 0.5 * float(np.min(grid.upper - np.asarray(grid.origin)))
    scale = np.minimum(1.0, np.linalg.norm(coords - center, axis=-1) / radius)
    return scale[..., None] * data(coords)


@dataclass
class Problem:
    """Initial field together with its anchoring."""

    field: Field
    anchoring: AnchoringSpec
    data: DataFunction


def build_problem(
    grid: Grid, potential: Potential, data: DataFunction, anchoring: str = ANCHORING_DIRICHLET, strength: float = 0.0, init: str = INIT_DATA
) -> Problem:
    values_b = data(grid.coords())
    if init == INIT_DATA:
        values = values_b.copy()
    elif init == INIT_RADIAL:
        values = radial_initial(grid, data)
    else:
        raise InputDomainError("init", init, f"{INIT_DATA} or {INIT_RADIAL}")
    mask = grid.boundary_mask()
    if anchoring == ANCHORING_DIRICHLET:
        values[mask] = values_b[mask]
        anchor = AnchoringSpec.dirichlet(values_b)
    elif anchoring == ANCHORING_WEAK:
        anchor = AnchoringSpec.weak(strength, values_b)
    elif anchoring == ANCHORING_FREE:
        anchor = AnchoringSpec.free()
    else:
        raise InputDomainError("anchoring", anchoring, "dirichlet, weak or free")
    _LOGGER.debug(f"Problem on {grid.kind} grid {grid.shape}, h={grid.h:g}, anchoring={anchoring}, init={init}")
    return Problem(Field(grid, values, mask), anchor, data)


def perturbed_constant(potential: Potential, amplitude: float, normal: float = 0.0) -> tuple[DataFunction, DataFunction]:
    """(u, v*) on the unit sphere: v* the constant point of N over e3, u = v* (1 + normal x3) + amplitude * tangent field.

    The normal part moves u off N so that f(u) is measurable above roundoff.
    """
    v_star = potential.vacuum_points(np.array([0.0, 0.0, 1.0]))
    # directions tangent to N at v*: e1, e2 for GL; the xz, yz basis elements for LdG
    tangent = (0, 1) if potential.k == 3 else (3, 4)

    def u(x: np.ndarray) -> np.ndarray:
        values = v_star * (1.0 + normal * x[..., 2:3])
        values[..., tangent[0]] += amplitude * x[..., 0]
        values[..., tangent[1]] += amplitude * x[..., 1]
        return values

    def v(x: np.ndarray) -> np.ndarray:
        return np.broadcast_to(v_star, (*x.shape[:-1], potential.k)).copy()

    return u, v
