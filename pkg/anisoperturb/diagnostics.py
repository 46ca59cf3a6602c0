"""Measurements on computed fields: energy decay on balls, Hölder estimates, boundary data, defects, convergence."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
import logging

import numpy as np
from scipy import ndimage, signal
from scipy.spatial.distance import pdist

from .const import (
    ANCHORING_WEAK,
    BIAXIALITY_DEFECT,
    DEFAULT_CAMPANATO_STRIDE,
    DEFAULT_DEFECT_FRACTION,
    DEFAULT_DELTA,
    DEFAULT_M,
    DIM,
    MAX_HOLDER_POINTS,
    MIN_RADIUS_CELLS,
    POTENTIAL_LDG,
    VACUUM_ENERGY_TOL,
)
from .elastic import ElasticModel
from .exceptions import GeometryError, InputDomainError, InsufficientDataError
from .field import BallMask, Field, energy, gradient, linf_distance
from .manifold import Potential, biaxiality
from .solver import AnchoringSpec, SweepStage

_LOGGER = logging.getLogger(__name__)


@dataclass
class DecayReport:
    """Renormalized energies on concentric balls (or half-balls) with the fitted decay exponent."""

    center: list[float]
    radii: list[float]
    renormalized_energy: list[float]
    renormalized_dirichlet: list[float]
    alpha: float | None
    fit_residual: float | None
    below_delta: list[bool]
    delta: float
    half: bool = False
    data_norm: list[float] | None = None
    anchoring_quantity: list[float] | None = None

    @property
    def holder_exponent(self) -> float | None:
        """Exponent of C^alpha implied by r^(2-n) int |grad u|^2 ~ r^(2 alpha)."""
        return None if self.alpha is None else 0.5 * self.alpha

    def rows(self) -> list[dict]:
        out = []
        for i, r in enumerate(self.radii):
            row = {"r": r, "renormalized_energy": self.renormalized_energy[i], "renormalized_dirichlet": self.renormalized_dirichlet[i]}
            row["below_delta"] = int(self.below_delta[i])
            if self.data_norm is not None:
                row["data_norm"] = self.data_norm[i]
            if self.anchoring_quantity is not None:
                row["anchoring_quantity"] = self.anchoring_quantity[i]
            out.append(row)
        return out

    def summary(self) -> dict:
        return {"center": self.center, "alpha": self.alpha, "holder_exponent": self.holder_exponent, "fit_residual": self.fit_residual, "half": self.half}


def _fit_exponent(radii: list[float], values: list[float]) -> tuple[float | None, float | None]:
    v = np.asarray(values)
    if len(radii) < 2 or np.any(v <= VACUUM_ENERGY_TOL):
        return None, None
    x = np.log(radii)
    y = np.log(v)
    (slope, intercept), residuals, *_ = np.polyfit(x, y, 1, full=True)
    return float(slope), float(residuals[0]) if len(residuals) else 0.0


def _dirichlet_density(field: Field) -> np.ndarray:
    g = gradient(field)
    return np.sum(g * g, axis=(-2, -1))


def _valid_radii(field: Field, radii: list[float], fits) -> list[float]:
    h = field.grid.h
    valid = []
    for r in sorted(set(float(r) for r in radii)):
        if r < MIN_RADIUS_CELLS * h or not fits(r):
            _LOGGER.debug(f"Radius {r:.4g} skipped (under-resolved or outside the grid)")
            continue
        valid.append(r)
    if len(valid) < 2:
        raise InsufficientDataError(len(valid))
    return valid


def decay_profile(
    field: Field,
    epsilon: float,
    elastic: ElasticModel,
    potential: Potential,
    center: np.ndarray,
    radii: list[float],
    delta: float = DEFAULT_DELTA,
    deterministic: bool = False,
) -> DecayReport:
    """r^-1 E_eps(B_r) and r^-1 int_{B_r} |grad u|^2 with the log-log slope of the latter."""
    center = np.asarray(center, dtype=float)
    valid = _valid_radii(field, radii, lambda r: field.grid.contains_ball(center, r))
    dens = _dirichlet_density(field)
    vol = field.grid.node_volume
    renorm, dirichlet = [], []
    for r in valid:
        mask = BallMask.build(field.grid, center, r)
        renorm.append(energy(field, epsilon, elastic, potential, mask, deterministic).total / r)
        dirichlet.append(float(np.sum(mask.weights * dens)) * vol / r)
    alpha, residual = _fit_exponent(valid, dirichlet)
    _LOGGER.info(f"Decay profile at {tuple(center)}: alpha={alpha}")
    return DecayReport(center.tolist(), valid, renorm, dirichlet, alpha, residual, [e <= delta**2 for e in renorm], delta)


def large_scale_ratio(
    field: Field,
    epsilon: float,
    elastic: ElasticModel,
    potential: Potential,
    center: np.ndarray,
    theta: float,
    r0: float | None = None,
) -> float | None:
    """theta^(2-n) E(B_{theta r0}) / E(B_{r0}); None when B_{r0} carries no energy."""
    if not 0 < theta <= 0.5:
        raise InputDomainError("theta", theta, "0 < theta <= 1/2")
    grid = field.grid
    center = np.asarray(center, dtype=float)
    if r0 is None:
        r0 = float(min(np.min(center - np.asarray(grid.origin)), np.min(grid.upper - center)))
    if theta * r0 < MIN_RADIUS_CELLS * grid.h:
        raise GeometryError(f"Inner radius {theta * r0:.4g} under-resolved")
    if not grid.contains_ball(center, r0):
        raise GeometryError(f"Ball B_{r0:.4g}({tuple(center)}) exits the grid")
    outer = energy(field, epsilon, elastic, potential, BallMask.build(grid, center, r0)).total
    if outer < VACUUM_ENERGY_TOL:
        return None
    inner = energy(field, epsilon, elastic, potential, BallMask.build(grid, center, theta * r0)).total
    return inner / (theta ** (DIM - 2) * outer)


def ball_integrals(density: np.ndarray, h: float, r: float) -> np.ndarray:
    """int_{B_r(x)} density for every node x, by FFT convolution with a partial-volume ball kernel."""
    m = int(np.ceil(r / h)) + 1
    axis = h * np.arange(-m, m + 1)
    kgrid = np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1)
    kernel = np.zeros(kgrid.shape[:DIM])
    for dx in (-0.25, 0.25):
        for dy in (-0.25, 0.25):
            for dz in (-0.25, 0.25):
                p = kgrid + h * np.array([dx, dy, dz])
                kernel += np.sum(p * p, axis=-1) <= r * r
    return signal.fftconvolve(density, kernel / 8.0, mode="same") * h**DIM


@dataclass
class CampanatoReport:
    """Campanato supremum, direct Hölder quotient and the per-radius trend."""

    alpha: float
    value: float
    quotient: float
    diverging: bool
    radii: list[float] = field(default_factory=list)
    per_radius: list[float] = field(default_factory=list)
    pairs: int = 0

    def __float__(self) -> float:
        return self.value


def campanato_holder(
    field: Field,
    region: tuple[np.ndarray, float],
    alpha: float,
    radii: list[float] | None = None,
    stride: int = DEFAULT_CAMPANATO_STRIDE,
    max_points: int = MAX_HOLDER_POINTS,
    seed: int = 0,
) -> CampanatoReport:
    """sup of r^-(1+2 alpha) int_{B_r(x)} |grad u|^2 over lattice centers x in the region ball.

    The Hölder quotient runs over all pairs of region lattice points, or over a seeded sample of
    max_points of them when the region holds more.
    """
    if not 0 < alpha < 1:
        raise InputDomainError("alpha", alpha, "0 < alpha < 1")
    grid = field.grid
    h = grid.h
    if radii is None:
        top = 0.25 * h * (min(grid.shape) - 1)
        radii = [MIN_RADIUS_CELLS * h * 2**j for j in range(8) if MIN_RADIUS_CELLS * h * 2**j <= top]
    center, radius = np.asarray(region[0], dtype=float), float(region[1])
    coords = grid.coords()
    lattice = np.zeros(grid.shape, dtype=bool)
    lattice[::stride, ::stride, ::stride] = True
    in_region = lattice & (np.linalg.norm(coords - center, axis=-1) <= radius)
    dens = _dirichlet_density(field)
    per_radius = []
    used = []
    for r in radii:
        m = int(np.ceil(r / h))
        fits = np.zeros(grid.shape, dtype=bool)
        fits[m : grid.shape[0] - m, m : grid.shape[1] - m, m : grid.shape[2] - m] = True
        centers = in_region & fits
        if not centers.any():
            continue
        integrals = ball_integrals(dens, h, r)
        per_radius.append(float(np.max(np.maximum(integrals[centers], 0.0))) / r ** (1 + 2 * alpha))
        used.append(float(r))
    value = max(per_radius, default=0.0)
    points = coords[in_region]
    values = field.values[in_region]
    if len(points) > max_points:
        keep = np.sort(np.random.default_rng(seed).choice(len(points), max_points, replace=False))
        points, values = points[keep], values[keep]
    quotient = 0.0
    pairs = len(points) * (len(points) - 1) // 2
    if pairs:
        quotient = float(np.max(pdist(values) / pdist(points) ** alpha))
    slope, _ = _fit_exponent(used, per_radius) if len(used) >= 2 else (None, None)
    diverging = bool(slope is not None and slope < 0.0)
    if diverging:
        _LOGGER.warning(f"Campanato quotient grows as r decreases (slope {slope:.3g}) in region around {tuple(center)}")
    return CampanatoReport(alpha, value, quotient, diverging, used, per_radius, pairs)


def boundary_data_norm(values: np.ndarray, h: float, face_coords: np.ndarray, point: np.ndarray, r: float) -> float:
    """N(u_b; B'_r) = r^2 sup |grad' u_b|^2 + r^4 sup |grad'^2 u_b| from tangential differences on the face."""
    first = np.stack(np.gradient(values, h, axis=(0, 1)), axis=-1)
    second = np.stack([np.stack(np.gradient(first[..., i], h, axis=(0, 1)), axis=-1) for i in range(2)], axis=-1)
    patch = np.linalg.norm(face_coords - point, axis=-1) <= r
    g1 = float(np.max(np.sum(first[patch] ** 2, axis=(-2, -1))))
    g2 = float(np.max(np.sqrt(np.sum(second[patch] ** 2, axis=(-3, -2, -1)))))
    return r**2 * g1 + r**4 * g2


def boundary_decay_profile(
    field: Field,
    epsilon: float,
    elastic: ElasticModel,
    potential: Potential,
    point: np.ndarray,
    radii: list[float],
    anchoring: AnchoringSpec | None = None,
    delta: float = DEFAULT_DELTA,
) -> DecayReport:
    """Decay profile over half-balls resting on the bottom face z = z0, with the boundary data norm per radius."""
    grid = field.grid
    point = np.asarray(point, dtype=float)
    if abs(point[2] - grid.origin[2]) > 1e-9 * grid.h:
        raise GeometryError(f"Point {tuple(point)} is not on the flat face z = {grid.origin[2]:.6g}")
    lo, up = np.asarray(grid.origin), grid.upper

    def fits(r: float) -> bool:
        tol = 1e-9 * grid.h
        return bool(np.all(point[:2] - r >= lo[:2] - tol) and np.all(point[:2] + r <= up[:2] + tol) and point[2] + r <= up[2] + tol)

    valid = _valid_radii(field, radii, fits)
    weak = anchoring is not None and anchoring.kind == ANCHORING_WEAK
    data = anchoring.values[:, :, 0] if anchoring is not None and anchoring.values is not None else field.values[:, :, 0]
    face_coords = grid.coords()[:, :, 0, :2]
    dens = _dirichlet_density(field)
    vol = grid.node_volume
    renorm, dirichlet, norms, quantity = [], [], [], []
    for r in valid:
        mask = BallMask.build(grid, point, r, half=True)
        total = energy(field, epsilon, elastic, potential, mask).total
        patch = np.linalg.norm(face_coords - point[:2], axis=-1) <= r
        if weak:
            g = anchoring.strength * np.sum((field.values[:, :, 0] - data) ** 2, axis=-1)
            total += float(np.sum(g[patch])) * grid.h**2
            quantity.append(r * float(np.max(g[patch])))
        renorm.append(total / r)
        dirichlet.append(float(np.sum(mask.weights * dens)) * vol / r)
        norms.append(boundary_data_norm(data, grid.h, face_coords, point[:2], r))
    alpha, residual = _fit_exponent(valid, dirichlet)
    below = [e + n <= delta**2 for e, n in zip(renorm, norms)]
    return DecayReport(point.tolist(), valid, renorm, dirichlet, alpha, residual, below, delta, True, norms, quantity if weak else None)


@dataclass
class DefectComponent:
    size: int
    center: list[float]


@dataclass
class DefectSet:
    """Nodes far from N (or strongly biaxial) grouped into connected components."""

    tau: float
    beta_threshold: float
    nodes: np.ndarray
    components: list[DefectComponent]

    def to_dict(self) -> dict:
        return {"tau": self.tau, "beta_threshold": self.beta_threshold, "count": len(self.components), "components": [asdict(c) for c in self.components]}


def detect_defects(field: Field, potential: Potential, tau: float | None = None) -> DefectSet:
    tau = DEFAULT_DEFECT_FRACTION * potential.s_star if tau is None else float(tau)
    mask = potential.dist(field.values) > tau
    if potential.kind == POTENTIAL_LDG:
        beta = biaxiality(field.values)
        mask |= np.isnan(beta) | (beta > BIAXIALITY_DEFECT)
    labels, count = ndimage.label(mask, structure=ndimage.generate_binary_structure(DIM, DIM))
    components = []
    if count:
        index = list(range(1, count + 1))
        sizes = ndimage.sum_labels(mask, labels, index)
        centers = ndimage.center_of_mass(mask, labels, index)
        for size, c in zip(sizes, centers):
            components.append(DefectComponent(int(size), (np.asarray(field.grid.origin) + field.grid.h * np.asarray(c)).tolist()))
    _LOGGER.info(f"Detected {count} defect component(s) with tau={tau:.4g}")
    return DefectSet(tau, BIAXIALITY_DEFECT, np.argwhere(mask), components)


@dataclass
class ConvergenceRow:
    stage: int
    epsilon: float
    h1_increment: float | None
    linf_to_final: float
    sup_norm: float
    within_m: bool
    defects: int


@dataclass
class ConvergenceReport:
    """Sweep convergence table with the sup-norm witness against M."""

    exclusion_radius: float
    m_bound: float
    rows: list[ConvergenceRow]

    @property
    def linf_decreasing(self) -> bool:
        d = [r.linf_to_final for r in self.rows[:-1]]
        return all(b <= a for a, b in zip(d, d[1:]))

    @property
    def h1_decreasing(self) -> bool:
        d = [r.h1_increment for r in self.rows if r.h1_increment is not None]
        return all(b <= a for a, b in zip(d, d[1:]))


def convergence_report(
    stages: list[SweepStage], potential: Potential, exclusion_radius: float, m_bound: float = DEFAULT_M, tau: float | None = None
) -> ConvergenceReport:
    if len(stages) < 2:
        raise InputDomainError("stages", len(stages), ">= 2 sweep stages")
    final = stages[-1].field
    coords = final.grid.coords()
    defects = [detect_defects(s.field, potential, tau) for s in stages]
    keep = np.ones(final.grid.shape)
    for c in defects[-1].components:
        keep[np.linalg.norm(coords - np.asarray(c.center), axis=-1) <= exclusion_radius] = 0.0
    rows = []
    for stage, found in zip(stages, defects):
        sup = float(np.max(np.linalg.norm(stage.field.values, axis=-1)))
        rows.append(
            ConvergenceRow(
                stage.stage,
                stage.epsilon,
                stage.h1_increment,
                linf_distance(stage.field, final, keep),
                sup,
                sup <= m_bound,
                len(found.components),
            )
        )
    return ConvergenceReport(exclusion_radius, m_bound, rows)
