"""Boundary modification and extension constructions on a cube-sphere mesh of the unit sphere.

Each cube face is split into m x m blocks (m = 2^level) in equiangular coordinates; every block is a
chart s, t in [-1, 1] sampled on a p x p node lattice (p even, so the block center is never a node).
Annulus fields on B_1 minus B_(1-lambda) add a radial coordinate r' in [-1, 1] (r' = 1 is the outer sphere).
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass
import logging

import numpy as np
from scipy import ndimage, sparse
from scipy.sparse import linalg as sparse_linalg

from .const import (
    DEFAULT_DELTA1,
    DEFAULT_ETA,
    DEFAULT_FACE_SAMPLES,
    DEFAULT_LAYERS,
    DIM,
    EDGE_RATIO_FLOOR,
    EDGE_RATIO_RELATIVE,
    MAX_LEVEL,
    MIN_LEVEL,
)
from .exceptions import (
    InputDomainError,
    NonuniqueGeodesicError,
    PreconditionError,
    ProjectionUndefinedError,
    SmallnessViolationError,
)
from .manifold import Potential
from .snapshot import write_array

_LOGGER = logging.getLogger(__name__)

# (normal axis, sign) of the six cube faces
_CUBE_FACES = [(0, 1.0), (0, -1.0), (1, 1.0), (1, -1.0), (2, 1.0), (2, -1.0)]


def _trapezoid_weights(n: int, spacing: float) -> np.ndarray:
    w = np.full(n, spacing)
    w[0] = w[-1] = 0.5 * spacing
    return w


@dataclass
class SurfaceEnergy:
    dirichlet: float
    potential: float
    total: float


@dataclass
class SphereMesh:
    """Cube-sphere cell complex of the unit sphere at scale lambda = 2^-level."""

    level: int
    blocks_per_side: int
    samples: int
    vertices: np.ndarray
    edges: np.ndarray
    faces: np.ndarray
    points: np.ndarray
    sqrt_g: np.ndarray
    g_inv: np.ndarray

    @property
    def lam(self) -> float:
        return 2.0**-self.level

    @property
    def chart(self) -> np.ndarray:
        return np.linspace(-1.0, 1.0, self.samples)

    @property
    def spacing(self) -> float:
        return 2.0 / (self.samples - 1)

    @property
    def euler_characteristic(self) -> int:
        return len(self.vertices) - len(self.edges) + len(self.faces)

    @property
    def chart_weights(self) -> np.ndarray:
        w = _trapezoid_weights(self.samples, self.spacing)
        return np.outer(w, w)

    def face_areas(self) -> np.ndarray:
        return np.sum(self.chart_weights * self.sqrt_g, axis=(1, 2))

    def area_distortion(self) -> tuple[float, float]:
        """Smallest and largest block area in units of lambda^2."""
        areas = self.face_areas() / self.lam**2
        return float(areas.min()), float(areas.max())

    def sample(self, func: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """Evaluate func on the sample points; values shaped (faces, p, p, k)."""
        return np.asarray(func(self.points), dtype=float)

    def integrate(self, density: np.ndarray) -> float:
        return float(np.sum(self.chart_weights * self.sqrt_g * density))

    def tangential_dirichlet(self, values: np.ndarray) -> np.ndarray:
        """g^ab u_a . u_b per sample."""
        du = np.stack(np.gradient(values, self.spacing, axis=(1, 2)), axis=-1)
        return np.einsum("...ab,...ka,...kb->...", self.g_inv, du, du)

    def surface_energy(self, values: np.ndarray, epsilon: float, potential: Potential) -> SurfaceEnergy:
        dirichlet = self.integrate(self.tangential_dirichlet(values))
        pot = self.integrate(potential.f(values))
        return SurfaceEnergy(dirichlet, pot, dirichlet + pot / epsilon**2)

    def l2_distance_sq(self, u: np.ndarray, v: np.ndarray) -> float:
        return self.integrate(np.sum((u - v) ** 2, axis=-1))

    def save_field(self, path, values: np.ndarray):
        """Snapshot of a mesh field; axes are (block, s, t)."""
        return write_array(path, values, [1.0, self.spacing, self.spacing], [0.0, -1.0, -1.0])


def build_sphere_mesh(level: int, samples: int = DEFAULT_FACE_SAMPLES) -> SphereMesh:
    if not MIN_LEVEL <= level <= MAX_LEVEL:
        raise InputDomainError("level", level, f"{MIN_LEVEL} <= level <= {MAX_LEVEL}")
    if samples < 4 or samples % 2:
        raise InputDomainError("samples", samples, "even and >= 4")
    m = 2**level
    bounds = np.linspace(-np.pi / 4.0, np.pi / 4.0, m + 1)
    half = 0.5 * (bounds[1] - bounds[0])
    chart = np.linspace(-1.0, 1.0, samples)
    blocks, corners = [], []
    for axis, sign in _CUBE_FACES:
        t1, t2 = [a for a in range(DIM) if a != axis]
        for i in range(m):
            for j in range(m):
                xi = 0.5 * (bounds[i] + bounds[i + 1]) + half * chart
                eta = 0.5 * (bounds[j] + bounds[j + 1]) + half * chart
                cube = np.zeros((samples, samples, DIM))
                cube[..., axis] = sign
                cube[..., t1] = np.tan(xi)[:, None]
                cube[..., t2] = np.tan(eta)[None, :]
                blocks.append(cube / np.linalg.norm(cube, axis=-1, keepdims=True))
                c = blocks[-1]
                corners.append([c[0, 0], c[-1, 0], c[-1, -1], c[0, -1]])
    points = np.stack(blocks)
    corner_points = np.asarray(corners).reshape(-1, DIM)
    vertices, inverse = np.unique(np.round(corner_points, 10) + 0.0, axis=0, return_inverse=True)
    faces = inverse.reshape(-1, 4)
    pairs = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 3]], faces[:, [3, 0]]])
    edges = np.unique(np.sort(pairs, axis=1), axis=0)

    spacing = 2.0 / (samples - 1)
    dx = np.stack(np.gradient(points, spacing, axis=(1, 2), edge_order=2), axis=-1)
    g = np.einsum("...ia,...ib->...ab", dx, dx)
    mesh = SphereMesh(level, m, samples, vertices, edges, faces, points, np.sqrt(np.linalg.det(g)), np.linalg.inv(g))
    _LOGGER.debug(f"Sphere mesh level {level}: V={len(vertices)} E={len(edges)} F={len(faces)} chi={mesh.euler_characteristic}")
    return mesh


@dataclass
class AnnulusField:
    """Samples of a map on B_1 minus B_(1-lambda), one prism per mesh face."""

    mesh: SphereMesh
    values: np.ndarray

    @property
    def layers(self) -> int:
        return self.values.shape[3]

    @property
    def radial(self) -> np.ndarray:
        return np.linspace(-1.0, 1.0, self.layers)

    @property
    def radii(self) -> np.ndarray:
        return 1.0 - self.mesh.lam * (1.0 - self.radial) / 2.0

    def outer(self) -> np.ndarray:
        return self.values[:, :, :, -1]

    def inner(self) -> np.ndarray:
        return self.values[:, :, :, 0]

    def save(self, path):
        """Snapshot with axes (block, s, t, r')."""
        s = self.mesh.spacing
        return write_array(path, self.values, [1.0, s, s, 2.0 / (self.layers - 1)], [0.0, -1.0, -1.0, -1.0])

    def energy(self, epsilon: float, potential: Potential) -> SurfaceEnergy:
        """int |grad phi|^2 + f(phi) / eps^2 over the annulus, in spherical coordinates."""
        mesh = self.mesh
        lam = mesh.lam
        drad = 2.0 / (self.layers - 1)
        rho = self.radii[None, None, None, :]
        ds, dt = np.gradient(self.values, mesh.spacing, axis=(1, 2))
        dr = np.gradient(self.values, drad, axis=3) * (2.0 / lam)
        du = np.stack([ds, dt], axis=-1)
        tangential = np.einsum("fstab,fstlka,fstlkb->fstl", mesh.g_inv, du, du)
        density = tangential / rho**2 + np.sum(dr * dr, axis=-1)
        weights = (mesh.chart_weights * mesh.sqrt_g)[..., None] * _trapezoid_weights(self.layers, drad)[None, None, None, :] * (lam / 2.0) * rho**2
        dirichlet = float(np.sum(weights * density))
        pot = float(np.sum(weights * potential.f(self.values)))
        return SurfaceEnergy(dirichlet, pot, dirichlet + pot / epsilon**2)


def _harmonic_extension(values: np.ndarray) -> np.ndarray:
    """Discrete harmonic extension of each block's boundary trace (5-point stencil on the chart square)."""
    faces, p, _, k = values.shape
    n = p - 2
    lap1 = sparse.diags([-np.ones(n - 1), 2.0 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1])
    eye = sparse.identity(n)
    lu = sparse_linalg.splu((sparse.kron(lap1, eye) + sparse.kron(eye, lap1)).tocsc())
    trace = values.copy()
    trace[:, 1:-1, 1:-1] = 0.0
    rhs = trace[:, :-2, 1:-1] + trace[:, 2:, 1:-1] + trace[:, 1:-1, :-2] + trace[:, 1:-1, 2:]
    rhs = rhs.transpose(1, 2, 0, 3).reshape(n * n, faces * k)
    interior = lu.solve(rhs)
    out = trace
    out[:, 1:-1, 1:-1] = interior.reshape(n, n, faces, k).transpose(2, 0, 1, 3)
    return out


def _project_blocks(values: np.ndarray, potential: Potential) -> np.ndarray:
    """Projection onto N block by block; raises naming the first block where it is undefined."""
    out = np.empty_like(values)
    limit = 0.5 * potential.vacuum_radius
    for face in range(values.shape[0]):
        try:
            out[face] = potential.project(values[face])
        except ProjectionUndefinedError as err:
            raise SmallnessViolationError(face, str(err)) from err
        if (worst := float(np.max(potential.dist(values[face])))) > limit:
            raise SmallnessViolationError(face, f"distance {worst:.4g} to N exceeds {limit:.4g}")
    return out


def _fill_interior(shell: np.ndarray) -> np.ndarray:
    """0-homogeneous extension of the prism-box boundary values into each prism."""
    faces, p, _, layers, k = shell.shape
    s = np.linspace(-1.0, 1.0, p)
    r = np.linspace(-1.0, 1.0, layers)
    y = np.stack(np.meshgrid(s, s, r, indexing="ij"), axis=-1)
    yb = y / np.max(np.abs(y), axis=-1, keepdims=True)
    idx = np.stack([(yb[..., 0] + 1.0) * (p - 1) / 2.0, (yb[..., 1] + 1.0) * (p - 1) / 2.0, (yb[..., 2] + 1.0) * (layers - 1) / 2.0])
    coords = np.broadcast_to(idx[:, None], (DIM, faces, p, p, layers))
    face_idx = np.broadcast_to(np.arange(faces, dtype=float)[:, None, None, None], (faces, p, p, layers))
    coords = np.concatenate([face_idx[None], coords]).reshape(DIM + 1, -1)
    out = shell.copy()
    interior = np.zeros((p, p, layers), dtype=bool)
    interior[1:-1, 1:-1, 1:-1] = True
    for c in range(k):
        filled = ndimage.map_coordinates(shell[..., c], coords, order=1, mode="nearest").reshape(faces, p, p, layers)
        out[..., c] = np.where(interior, filled, shell[..., c])
    return out


def _edge_mask(p: int) -> np.ndarray:
    mask = np.zeros((p, p), dtype=bool)
    mask[0, :] = mask[-1, :] = mask[:, 0] = mask[:, -1] = True
    return mask


@dataclass
class ModificationResult:
    """Output of the boundary modification with its measured constants."""

    w: np.ndarray
    phi: AnnulusField
    energy_u: float
    energy_phi: float
    dirichlet_w: float
    precondition_ok: bool
    edge_potential_ratio: float | None

    @property
    def c_phi(self) -> float | None:
        lam = self.phi.mesh.lam
        return None if self.energy_u <= 0 else self.energy_phi / (lam * self.energy_u)

    @property
    def c_w(self) -> float | None:
        return None if self.energy_u <= 0 else self.dirichlet_w / self.energy_u


def modify_boundary(
    mesh: SphereMesh, u: np.ndarray, epsilon: float, potential: Potential, delta1: float = DEFAULT_DELTA1, layers: int = DEFAULT_LAYERS
) -> ModificationResult:
    """N-valued w on the sphere and an annulus map phi from u (outside) to w (inside)."""
    lam = mesh.lam
    if not 0 < epsilon <= lam:
        raise PreconditionError(f"epsilon={epsilon:.4g} must satisfy 0 < epsilon <= lambda={lam:.4g}")
    if layers < 3 or layers % 2 == 0:
        raise InputDomainError("layers", layers, "odd and >= 3")
    e_u = mesh.surface_energy(u, epsilon, potential)
    precondition_ok = e_u.total <= delta1**2
    if not precondition_ok:
        _LOGGER.warning(f"E_eps(u; sphere)={e_u.total:.4g} exceeds delta1^2={delta1**2:.4g}; constants may not be uniform")

    w = _project_blocks(_harmonic_extension(u), potential)
    p = mesh.samples
    radial = np.linspace(-1.0, 1.0, layers)
    shell = np.zeros((*u.shape[:3], layers, u.shape[-1]))
    shell[:, :, :, -1] = u
    shell[:, :, :, 0] = w
    side = _edge_mask(p)
    t = ((1.0 - radial) / 2.0)[None, None, :, None]
    shell[:, side] = u[:, side][:, :, None] + t * (w[:, side] - u[:, side])[:, :, None]
    phi = AnnulusField(mesh, _fill_interior(shell))

    ratio = None
    fu = potential.f(u[:, side])
    fphi = potential.f(phi.values[:, side])
    floor = max(EDGE_RATIO_FLOOR * max(1.0, potential.s_star**4), EDGE_RATIO_RELATIVE * float(np.max(fu, initial=0.0)))
    positive = fu > floor
    if positive.any():
        ratio = float(np.max(fphi[positive] / fu[positive][:, None]))
    e_phi = phi.energy(epsilon, potential)
    dirichlet_w = mesh.integrate(mesh.tangential_dirichlet(w))
    _LOGGER.info(f"Boundary modification at lambda={lam:.4g}: E(u)={e_u.total:.4e} E(phi)={e_phi.total:.4e} |grad w|^2={dirichlet_w:.4e}")
    return ModificationResult(w, phi, e_u.total, e_phi.total, dirichlet_w, precondition_ok, ratio)


def _first_failing_block(potential: Potential, start: np.ndarray, end: np.ndarray) -> int:
    for face in range(start.shape[0]):
        try:
            potential.geodesic(0.5, start[face], end[face])
        except NonuniqueGeodesicError:
            return face
    return -1


@dataclass
class ExtensionResult:
    """Output of the extension between a trace u and an N-valued v_star, with measured constants."""

    phi: AnnulusField
    dirichlet_phi: float
    potential_phi: float
    data: float
    potential_u: float
    energy_phi: float

    @property
    def c_dirichlet(self) -> float | None:
        lam = self.phi.mesh.lam
        return None if self.data <= 0 else self.dirichlet_phi / (lam * self.data)

    @property
    def c_potential(self) -> float | None:
        lam = self.phi.mesh.lam
        return None if self.potential_u <= 1e-300 else self.potential_phi / (lam * self.potential_u)


def luckhaus_interpolant(
    mesh: SphereMesh,
    u: np.ndarray,
    v_star: np.ndarray,
    epsilon: float,
    potential: Potential,
    eta: float = DEFAULT_ETA,
    layers: int = DEFAULT_LAYERS,
) -> ExtensionResult:
    """Annulus map: linear u -> pi(u) on the outer half, geodesic pi(u) -> v_star on the inner half."""
    lam = mesh.lam
    if epsilon <= 0:
        raise InputDomainError("epsilon", epsilon, "positive")
    if layers < 3 or layers % 2 == 0:
        raise InputDomainError("layers", layers, "odd and >= 3")
    if not potential.on_manifold(v_star):
        raise InputDomainError("v_star", "off N", "N-valued within 1e-8")
    gradients = mesh.integrate(mesh.tangential_dirichlet(u)) + mesh.integrate(mesh.tangential_dirichlet(v_star))
    if gradients > 1.0:
        raise PreconditionError(f"int |grad u|^2 + int |grad v*|^2 = {gradients:.4g} > 1")
    gap = mesh.l2_distance_sq(u, v_star)
    if gap > (eta * lam) ** 2:
        raise PreconditionError(f"int |u - v*|^2 = {gap:.4g} exceeds (eta lambda)^2 = {(eta * lam) ** 2:.4g}")

    side = _edge_mask(mesh.samples)
    ue, ve = u[:, side], v_star[:, side]
    try:
        pe = potential.project(ue)
    except ProjectionUndefinedError as err:
        raise PreconditionError(f"Projection of the edge trace undefined: {err}") from err
    radial = np.linspace(-1.0, 1.0, layers)
    mid = layers // 2
    shell = np.zeros((*u.shape[:3], layers, u.shape[-1]))
    shell[:, :, :, -1] = u
    shell[:, :, :, 0] = v_star
    outer = (1.0 - radial[mid:])[None, None, :, None]
    shell[:, side, mid:] = ue[:, :, None] + outer * (pe - ue)[:, :, None]
    for layer in range(mid + 1):
        try:
            shell[:, side, layer] = potential.geodesic(-radial[layer], pe, ve)
        except NonuniqueGeodesicError as err:
            raise PreconditionError(f"Geodesic not unique on the edge trace of block {_first_failing_block(potential, pe, ve)}: {err}") from err

    values = _fill_interior(shell)
    # the inner half only interpolates N-valued samples
    try:
        values[:, :, :, : mid + 1] = potential.project(values[:, :, :, : mid + 1])
    except ProjectionUndefinedError as err:
        raise PreconditionError(f"Inner half-layer left the projection neighbourhood of N: {err}") from err
    values[:, :, :, 0] = v_star
    values[:, side] = shell[:, side]
    phi = AnnulusField(mesh, values)
    e_phi = phi.energy(epsilon, potential)
    data = gradients + gap / lam**2
    potential_u = mesh.integrate(potential.f(u))
    _LOGGER.info(f"Extension at lambda={lam:.4g}: |grad phi|^2={e_phi.dirichlet:.4e} f(phi)={e_phi.potential:.4e} E(phi)={e_phi.total:.4e} data={data:.4e}")
    return ExtensionResult(phi, e_phi.dirichlet, e_phi.potential, data, potential_u, e_phi.total)


@dataclass
class ScalingRow:
    level: int
    lam: float
    epsilon: float
    energy_u: float
    energy_phi: float
    dirichlet_w: float
    c_phi: float | None
    c_w: float | None
    edge_potential_ratio: float | None = None
    extension_energy: float | None = None
    extension_dirichlet: float | None = None
    c_extension_dirichlet: float | None = None
    c_extension_potential: float | None = None


def scaling_study(
    levels: list[int],
    potential: Potential,
    u_func: Callable[[np.ndarray], np.ndarray],
    v_func: Callable[[np.ndarray], np.ndarray] | None = None,
    epsilon_factor: float = 1.0,
    delta1: float = DEFAULT_DELTA1,
    eta: float = DEFAULT_ETA,
    samples: int = DEFAULT_FACE_SAMPLES,
    layers: int = DEFAULT_LAYERS,
) -> list[ScalingRow]:
    """Run both constructions on dyadic levels with epsilon = factor * lambda."""
    rows = []
    for level in levels:
        mesh = build_sphere_mesh(level, samples)
        eps = epsilon_factor * mesh.lam
        u = mesh.sample(u_func)
        mod = modify_boundary(mesh, u, eps, potential, delta1, layers)
        row = ScalingRow(level, mesh.lam, eps, mod.energy_u, mod.energy_phi, mod.dirichlet_w, mod.c_phi, mod.c_w, mod.edge_potential_ratio)
        if v_func is not None:
            ext = luckhaus_interpolant(mesh, u, mesh.sample(v_func), eps, potential, eta, layers)
            row.extension_energy = ext.energy_phi
            row.extension_dirichlet = ext.dirichlet_phi
            row.c_extension_dirichlet = ext.c_dirichlet
            row.c_extension_potential = ext.c_potential
        rows.append(row)
    return rows
