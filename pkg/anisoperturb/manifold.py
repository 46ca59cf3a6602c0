"""Order parameter spaces, bulk potentials and the vacuum manifold N.

Two targets are built in:

* Landau-de Gennes: symmetric traceless 3x3 matrices, stored as 5 coordinates on a fixed
  Frobenius-orthonormal basis of S0, with f(Q) = a2|Q|^2 - b2 tr(Q^3) + c2|Q|^4 shifted so min f = 0.
* Ginzburg-Landau: vectors of R^3 with f(u) = (1 - |u|^2)^2 and N the unit sphere.

Every function takes arrays of points with the target components on the last axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import logging

import numpy as np
from scipy import optimize
from scipy.spatial.distance import cdist

from .const import (
    DEFAULT_SHELL_SAMPLES,
    EIGEN_GAP_TOL,
    FIBONACCI_GRID_SIZE,
    GROWTH_SLOPE_TOL,
    MIN_GROWTH_P,
    ON_MANIFOLD_TOL,
    POTENTIAL_GL,
    POTENTIAL_LDG,
    UNIT_TOL,
)
from .exceptions import DegenerateManifoldError, InputDomainError, NonuniqueGeodesicError, ProjectionUndefinedError

_LOGGER = logging.getLogger(__name__)

_SQRT2 = np.sqrt(2.0)
_SQRT6 = np.sqrt(6.0)


def _s0_basis() -> np.ndarray:
    basis = np.zeros((5, 3, 3))
    basis[0] = np.diag([-1.0, -1.0, 2.0]) / _SQRT6
    basis[1] = np.diag([1.0, -1.0, 0.0]) / _SQRT2
    basis[2, 0, 1] = basis[2, 1, 0] = 1.0 / _SQRT2
    basis[3, 0, 2] = basis[3, 2, 0] = 1.0 / _SQRT2
    basis[4, 1, 2] = basis[4, 2, 1] = 1.0 / _SQRT2
    basis.setflags(write=False)
    return basis


S0_BASIS = _s0_basis()


def to_matrix(z: np.ndarray) -> np.ndarray:
    """Reconstruct the symmetric traceless matrices of LdG coordinates."""
    return np.einsum("...a,aij->...ij", np.asarray(z, dtype=float), S0_BASIS)


def from_matrix(q: np.ndarray) -> np.ndarray:
    """Coordinates of the S0 part of 3x3 matrices."""
    return np.einsum("...ij,aij->...a", np.asarray(q, dtype=float), S0_BASIS)


def rotation_action(rotation: np.ndarray) -> np.ndarray:
    """The orthogonal 5x5 matrix acting on coordinates as Q -> R Q R^T."""
    r = np.asarray(rotation, dtype=float)
    return np.einsum("aij,ik,bkl,jl->ab", S0_BASIS, r, S0_BASIS, r)


def fibonacci_sphere(count: int) -> np.ndarray:
    """Quasi-uniform unit vectors on S^2."""
    i = np.arange(count) + 0.5
    z = 1.0 - 2.0 * i / count
    r = np.sqrt(1.0 - z * z)
    phi = np.pi * (1.0 + np.sqrt(5.0)) * i
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)


def q_from_director(n: np.ndarray, s: float | np.ndarray) -> np.ndarray:
    """Coordinates of s (n x n - I/3) for unit directors n."""
    n = np.asarray(n, dtype=float)
    norms = np.linalg.norm(n, axis=-1)
    if np.any(np.abs(norms - 1.0) > UNIT_TOL):
        raise InputDomainError("n", float(np.max(np.abs(norms - 1.0))), "|n| = 1 within 1e-10")
    q = np.einsum("...i,...j->...ij", n, n) - np.eye(3) / 3.0
    return np.asarray(s, dtype=float)[..., None] * from_matrix(q)


def uniaxial_profile(s: float | np.ndarray, a2: float, b2: float, c2: float) -> float | np.ndarray:
    """Unnormalized f_LdG along the uniaxial ray s (n x n - I/3)."""
    return (2.0 * a2 / 3.0) * s**2 - (2.0 * b2 / 9.0) * s**3 + (4.0 * c2 / 9.0) * s**4


def _check_ldg_params(a2: float, b2: float, c2: float) -> float:
    for name, value in (("a2", a2), ("b2", b2), ("c2", c2)):
        if not value > 0:
            raise InputDomainError(name, value, "> 0")
    disc = 9.0 * b2 * b2 - 192.0 * a2 * c2
    if disc <= 0:
        raise DegenerateManifoldError(a2, b2, c2, f"9b^4 - 192a^2c^2 = {disc:.6g} <= 0")
    return disc


def s_star(a2: float, b2: float, c2: float) -> float:
    """Closed form of the larger critical point of the uniaxial profile."""
    disc = _check_ldg_params(a2, b2, c2)
    return (3.0 * b2 + np.sqrt(disc)) / (16.0 * c2)


def uniaxial_oracle(a2: float, b2: float, c2: float) -> float:
    """1-D oracle for s_star: bracketed root of the profile derivative past the inflection."""
    _check_ldg_params(a2, b2, c2)
    lower = 3.0 * b2 / (16.0 * c2)

    def slope(s: float) -> float:
        return (4.0 * a2 / 3.0) * s - (2.0 * b2 / 3.0) * s**2 + (16.0 * c2 / 9.0) * s**3

    return optimize.brentq(slope, lower, 2.0 * lower, xtol=1e-15, rtol=4.0 * np.finfo(float).eps)


def golden_oracle(a2: float, b2: float, c2: float, upper: float = 100.0) -> float:
    """Coarse 1-D minimization of the uniaxial profile over (0, upper)."""
    res = optimize.minimize_scalar(
        uniaxial_profile, bounds=(0.0, max(upper, 4.0 * b2 / c2)), args=(a2, b2, c2), method="bounded", options={"xatol": 1e-10}
    )
    return float(res.x)


@dataclass(frozen=True)
class GrowthParams:
    """Exponents of the growth assumption on the gradient of f."""

    p: float
    a_exp: float

    def __post_init__(self) -> None:
        if not self.p > MIN_GROWTH_P:
            raise InputDomainError("p", self.p, "p > 3/2")
        upper = min(0.8, 4.0 / 3.0 - 1.0 / self.p)
        if not 0.5 <= self.a_exp <= upper:
            raise InputDomainError("a", self.a_exp, f"1/2 <= a <= {upper:.6g}")

    @property
    def A_exp(self) -> float:
        return 4.0 / 3.0 - 1.0 / self.p


@dataclass(frozen=True)
class Potential:
    """Bulk potential f with its vacuum manifold N = {f = 0}."""

    kind: str
    a2: float = 0.0
    b2: float = 0.0
    c2: float = 0.0
    s_star: float = field(init=False)
    normalization_constant: float = field(init=False)

    def __post_init__(self) -> None:
        if self.kind == POTENTIAL_LDG:
            star = s_star(self.a2, self.b2, self.c2)
            if self.b2 * self.b2 <= 24.0 * self.a2 * self.c2:
                raise DegenerateManifoldError(self.a2, self.b2, self.c2, "uniaxial critical point is not the global minimum (b^4 <= 24a^2c^2)")
            oracle = golden_oracle(self.a2, self.b2, self.c2)
            if abs(oracle - star) > 1e-6 * max(1.0, star):
                raise DegenerateManifoldError(self.a2, self.b2, self.c2, f"closed form s*={star} disagrees with oracle {oracle}")
            object.__setattr__(self, "s_star", float(star))
            object.__setattr__(self, "normalization_constant", float(-uniaxial_profile(star, self.a2, self.b2, self.c2)))
            _LOGGER.debug(f"LdG potential: s*={star:.12g} shift={self.normalization_constant:.12g}")
        elif self.kind == POTENTIAL_GL:
            object.__setattr__(self, "s_star", 1.0)
            object.__setattr__(self, "normalization_constant", 0.0)
        else:
            raise InputDomainError("kind", self.kind, f"one of {POTENTIAL_LDG!r}, {POTENTIAL_GL!r}")

    @classmethod
    def landau_de_gennes(cls, a2: float, b2: float, c2: float) -> Potential:
        return cls(POTENTIAL_LDG, float(a2), float(b2), float(c2))

    @classmethod
    def ginzburg_landau(cls) -> Potential:
        return cls(POTENTIAL_GL)

    @property
    def k(self) -> int:
        return 5 if self.kind == POTENTIAL_LDG else 3

    @property
    def vacuum_radius(self) -> float:
        """|z| for every z in N."""
        return self.s_star * np.sqrt(2.0 / 3.0) if self.kind == POTENTIAL_LDG else 1.0

    def f(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        q2 = np.sum(z * z, axis=-1)
        if self.kind == POTENTIAL_GL:
            return (1.0 - q2) ** 2
        q = to_matrix(z)
        tr3 = np.einsum("...ij,...jk,...ki->...", q, q, q)
        value = self.a2 * q2 - self.b2 * tr3 + self.c2 * q2 * q2 + self.normalization_constant
        return np.maximum(value, 0.0)

    def grad(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        q2 = np.sum(z * z, axis=-1)[..., None]
        if self.kind == POTENTIAL_GL:
            return -4.0 * (1.0 - q2) * z
        q = to_matrix(z)
        return 2.0 * self.a2 * z - 3.0 * self.b2 * from_matrix(q @ q) + 4.0 * self.c2 * q2 * z

    def difference(self, z: np.ndarray, dz: np.ndarray) -> np.ndarray:
        """f(z + dz) - f(z) by polynomial expansion, free of cancellation against f(z)."""
        z = np.asarray(z, dtype=float)
        dz = np.asarray(dz, dtype=float)
        q2 = np.sum(z * z, axis=-1)
        d2 = 2.0 * np.sum(z * dz, axis=-1) + np.sum(dz * dz, axis=-1)
        if self.kind == POTENTIAL_GL:
            return d2 * (d2 - 2.0 * (1.0 - q2))
        q = to_matrix(z)
        d = to_matrix(dz)
        qq = q @ q
        dd = d @ d
        d3 = (
            3.0 * np.einsum("...ij,...ji->...", qq, d)
            + 3.0 * np.einsum("...ij,...ji->...", q, dd)
            + np.einsum("...ij,...ji->...", dd, d)
        )
        return self.a2 * d2 - self.b2 * d3 + self.c2 * d2 * (2.0 * q2 + d2)

    def vacuum_points(self, directions: np.ndarray) -> np.ndarray:
        """Points of N labelled by unit vectors of S^2 (directors for LdG)."""
        if self.kind == POTENTIAL_GL:
            return np.asarray(directions, dtype=float)
        return q_from_director(directions, self.s_star)

    def _project(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        z = np.asarray(z, dtype=float)
        if self.kind == POTENTIAL_GL:
            norm = np.linalg.norm(z, axis=-1, keepdims=True)
            bad = norm[..., 0] <= EIGEN_GAP_TOL
            return z / np.where(norm > EIGEN_GAP_TOL, norm, 1.0), bad
        w, v = np.linalg.eigh(to_matrix(z))
        bad = (w[..., 2] - w[..., 1]) <= EIGEN_GAP_TOL
        n = v[..., :, 2]
        n = n / np.linalg.norm(n, axis=-1, keepdims=True)
        return q_from_director(n, self.s_star), bad

    def project(self, z: np.ndarray) -> np.ndarray:
        proj, bad = self._project(z)
        if np.any(bad):
            reason = "zero vector" if self.kind == POTENTIAL_GL else "degenerate leading eigenvalue"
            raise ProjectionUndefinedError(int(np.count_nonzero(bad)), reason)
        return proj

    def dist(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        proj, bad = self._project(z)
        d = np.asarray(np.linalg.norm(z - proj, axis=-1))
        if np.any(bad):
            candidates = self.vacuum_points(fibonacci_sphere(FIBONACCI_GRID_SIZE))
            d[bad] = cdist(z[bad].reshape(-1, self.k), candidates).min(axis=1)
        return d

    def on_manifold(self, z: np.ndarray, tol: float = ON_MANIFOLD_TOL) -> bool:
        return bool(np.all(self.dist(z) <= tol))

    def geodesic(self, t: float | np.ndarray, z1: np.ndarray, z2: np.ndarray) -> np.ndarray:
        z1 = np.asarray(z1, dtype=float)
        z2 = np.asarray(z2, dtype=float)
        if not (self.on_manifold(z1) and self.on_manifold(z2)):
            raise InputDomainError("geodesic endpoints", "off N", "endpoints on N within 1e-8")
        t = np.asarray(t, dtype=float)[..., None]
        if self.kind == POTENTIAL_GL:
            a = z1 / np.linalg.norm(z1, axis=-1, keepdims=True)
            b = z2 / np.linalg.norm(z2, axis=-1, keepdims=True)
        else:
            a = np.linalg.eigh(to_matrix(z1))[1][..., :, 2]
            b = np.linalg.eigh(to_matrix(z2))[1][..., :, 2]
            # n and -n label the same point of N
            b = np.where(np.sum(a * b, axis=-1, keepdims=True) < 0.0, -b, b)
        cos = np.clip(np.sum(a * b, axis=-1, keepdims=True), -1.0, 1.0)
        limit = -1.0 if self.kind == POTENTIAL_GL else 0.0
        if np.any(cos <= limit + 1e-12):
            raise NonuniqueGeodesicError(int(np.count_nonzero(cos <= limit + 1e-12)))
        theta = np.arccos(cos)
        small = theta < 1e-12
        sin = np.where(small, 1.0, np.sin(theta))
        wa = np.where(small, 1.0 - t, np.sin((1.0 - t) * theta) / sin)
        wb = np.where(small, t, np.sin(t * theta) / sin)
        n = wa * a + wb * b
        n = n / np.linalg.norm(n, axis=-1, keepdims=True)
        return self.vacuum_points(n)


def bulk_f(z: np.ndarray, pot: Potential) -> np.ndarray:
    return pot.f(z)


def grad_f(z: np.ndarray, pot: Potential) -> np.ndarray:
    return pot.grad(z)


def project_to_vacuum(z: np.ndarray, pot: Potential) -> np.ndarray:
    return pot.project(z)


def dist_to_vacuum(z: np.ndarray, pot: Potential) -> np.ndarray:
    return pot.dist(z)


def geodesic(t: float | np.ndarray, z1: np.ndarray, z2: np.ndarray, pot: Potential) -> np.ndarray:
    return pot.geodesic(t, z1, z2)


def biaxiality(z: np.ndarray) -> np.ndarray:
    """beta = 1 - 6 tr(Q^3)^2 / |Q|^6 for LdG coordinates; NaN where |Q| <= 1e-12."""
    z = np.asarray(z, dtype=float)
    q2 = np.sum(z * z, axis=-1)
    q = to_matrix(z)
    tr3 = np.einsum("...ij,...jk,...ki->...", q, q, q)
    valid = q2 > 1e-24
    beta = 1.0 - 6.0 * tr3**2 / np.where(valid, q2**3, 1.0)
    return np.where(valid, np.clip(beta, 0.0, 1.0), np.nan)


@dataclass
class GrowthReport:
    """Measured growth ratios of |grad f| on spherical shells."""

    radii: list[float]
    grad_ratio: list[float]
    power_ratio: list[float]
    grad_slope: float
    power_slope: float
    passed: bool


def _shell_directions(k: int, samples: int, seed: int) -> np.ndarray:
    if k == 3:
        dirs = fibonacci_sphere(samples)
    else:
        dirs = np.random.default_rng(seed).normal(size=(samples, k))
        dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)
    return np.concatenate([dirs, -dirs])


def check_growth_conditions(
    pot: Potential, gp: GrowthParams, sample_radii: list[float], samples: int = DEFAULT_SHELL_SAMPLES, seed: int = 0
) -> GrowthReport:
    """Sample max |grad f| / |z|^(6/p) and max |grad f| / f^a on shells |z| = R."""
    radii = sorted(float(r) for r in sample_radii if r >= 2.0 * pot.s_star)
    if len(radii) < 2:
        raise InputDomainError("sample_radii", sample_radii, f"at least two radii >= 2 s* = {2.0 * pot.s_star:.6g}")
    dirs = _shell_directions(pot.k, samples, seed)
    grad_ratio, power_ratio = [], []
    for r in radii:
        z = r * dirs
        g = np.linalg.norm(pot.grad(z), axis=-1)
        grad_ratio.append(float(np.max(g / r ** (6.0 / gp.p))))
        power_ratio.append(float(np.max(g / pot.f(z) ** gp.a_exp)))
    logr = np.log(radii)
    grad_slope = float(np.polyfit(logr, np.log(grad_ratio), 1)[0])
    power_slope = float(np.polyfit(logr, np.log(power_ratio), 1)[0])
    passed = bool(np.all(np.isfinite(grad_ratio + power_ratio)) and grad_slope <= GROWTH_SLOPE_TOL and power_slope <= GROWTH_SLOPE_TOL)
    _LOGGER.info(f"Growth check p={gp.p} a={gp.a_exp}: slopes {grad_slope:.3g}, {power_slope:.3g} -> {'pass' if passed else 'fail'}")
    return GrowthReport(radii, grad_ratio, power_ratio, grad_slope, power_slope, passed)


@dataclass
class TubeReport:
    """Measured constants of c1 dist^2 <= f <= c2 dist^2 near N."""

    c1: float
    c2: float
    samples: int

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.c1) and np.isfinite(self.c2) and 0.0 < self.c1 <= self.c2)


def sample_vacuum(pot: Potential, count: int, rng: np.random.Generator) -> np.ndarray:
    dirs = rng.normal(size=(count, 3))
    dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)
    return pot.vacuum_points(dirs)


def tube_constants(pot: Potential, samples: int = 10_000, seed: int = 0) -> TubeReport:
    """Sample f / dist^2 on the tube dist(z, N) <= s*/4."""
    rng = np.random.default_rng(seed)
    base = sample_vacuum(pot, samples, rng)
    step = rng.normal(size=(samples, pot.k))
    step *= (rng.uniform(0.02, 1.0, size=samples) * pot.s_star / 4.0 / np.linalg.norm(step, axis=-1))[:, None]
    z = base + step
    d = pot.dist(z)
    keep = (d > 1e-6 * pot.s_star) & (d <= pot.s_star / 4.0)
    ratio = pot.f(z[keep]) / d[keep] ** 2
    report = TubeReport(float(np.min(ratio)), float(np.max(ratio)), int(np.count_nonzero(keep)))
    _LOGGER.debug(f"Tube constants c1={report.c1:.4g} c2={report.c2:.4g} over {report.samples} samples")
    return report
