"""Elastic quadratic forms W(x, grad u) and their discrete Euler-Lagrange operator.

Gradients are stored as G[..., alpha, i] = d_i u^alpha, so a form is a symmetric (3k x 3k) matrix
acting on the flattened (alpha, i) index. The discrete energy puts the diagonal blocks A_ii on grid
edges (forward differences) and the mixed blocks A_ij, i != j, on cells (cell-averaged differences);
the operator is its exact gradient.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
import logging
import math
from typing import TYPE_CHECKING

import numpy as np

from .const import DIM, ELASTIC_GENERAL, ELASTIC_ISOTROPIC, ELASTIC_LDG, MIN_NODES_PER_AXIS
from .exceptions import InputDomainError
from .manifold import S0_BASIS

if TYPE_CHECKING:
    from .field import Field

_LOGGER = logging.getLogger(__name__)


def ldg_matrix(L1: float, L2: float, L3: float) -> np.ndarray:
    """Assemble the 15x15 form of L1|grad Q|^2 + L2 d_jQ_ik d_kQ_ij + L3 d_jQ_ij d_kQ_ik."""
    k = S0_BASIS.shape[0]
    eye = np.einsum("ab,jl->ajbl", np.eye(k), np.eye(DIM))
    l2 = np.einsum("aik,bij->ajbk", S0_BASIS, S0_BASIS)
    l2 = 0.5 * (l2 + l2.transpose(2, 3, 0, 1))
    l3 = np.einsum("aij,bik->ajbk", S0_BASIS, S0_BASIS)
    return (L1 * eye + L2 * l2 + L3 * l3).reshape(k * DIM, k * DIM)


def ldg_density(G: np.ndarray, L1: float, L2: float, L3: float) -> np.ndarray:
    """Pointwise LdG density from the full tensor d_j Q_ik."""
    dq = np.einsum("aik,...aj->...ikj", S0_BASIS, np.asarray(G, dtype=float))
    return (
        L1 * np.einsum("...ikj,...ikj->...", dq, dq)
        + L2 * np.einsum("...ikj,...ijk->...", dq, dq)
        + L3 * np.einsum("...ijj,...ikk->...", dq, dq)
    )


@dataclass
class PositivityReport:
    """Verdict of the three LdG positivity inequalities."""

    positive: bool
    margin: float
    min_eigenvalue: float

    @property
    def agrees(self) -> bool:
        return self.positive == (self.min_eigenvalue > 0)

    def __bool__(self) -> bool:
        return self.positive


def check_positivity(L1: float, L2: float, L3: float) -> PositivityReport:
    margin = min(L1 + L2, 2.0 * L1 - L2, 6.0 * L1 + L2 + 10.0 * L3)
    min_eig = float(np.linalg.eigvalsh(ldg_matrix(L1, L2, L3))[0])
    report = PositivityReport(bool(margin > 0), float(margin), min_eig)
    if not report.agrees:
        _LOGGER.warning(f"Positivity verdict for L=({L1}, {L2}, {L3}) disagrees with eigenvalue {min_eig:.3e}")
    return report


@dataclass
class EllipticityReport:
    """Measured ellipticity bounds lambda |xi|^2 <= W(xi) <= Lambda |xi|^2."""

    lambda_min: float
    Lambda_max: float

    @property
    def condition(self) -> float:
        return self.Lambda_max / self.lambda_min


@dataclass(frozen=True)
class ElasticModel:
    """Constant-coefficient elastic form with an optional scalar weight a(x)."""

    kind: str
    matrix: np.ndarray
    L: tuple[float, float, float] | None = None
    weight: np.ndarray | None = None
    lambda_min: float = field(init=False)
    Lambda_max: float = field(init=False)

    def __post_init__(self) -> None:
        a = np.asarray(self.matrix, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] % DIM:
            raise InputDomainError("coefficients", a.shape, "square (3k x 3k) array")
        if not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(a).max())):
            raise InputDomainError("coefficients", "asymmetric", "a_ij^ab = a_ji^ba")
        eig = np.linalg.eigvalsh(a)
        if eig[0] <= 0:
            raise InputDomainError("coefficients", float(eig[0]), "positive definite form (smallest eigenvalue > 0)")
        a.setflags(write=False)
        object.__setattr__(self, "matrix", a)
        object.__setattr__(self, "lambda_min", float(eig[0]))
        object.__setattr__(self, "Lambda_max", float(eig[-1]))

    @classmethod
    def ldg(cls, L1: float, L2: float, L3: float) -> ElasticModel:
        report = check_positivity(L1, L2, L3)
        if not report:
            raise InputDomainError("L", (L1, L2, L3), "L1+L2 > 0, 2L1-L2 > 0 and 6L1+L2+10L3 > 0")
        return cls(ELASTIC_LDG, ldg_matrix(L1, L2, L3), L=(float(L1), float(L2), float(L3)))

    @classmethod
    def isotropic(cls, k: int, scale: float = 1.0) -> ElasticModel:
        return cls(ELASTIC_ISOTROPIC, scale * np.eye(k * DIM))

    @classmethod
    def general(cls, coefficients: np.ndarray) -> ElasticModel:
        a = np.asarray(coefficients, dtype=float)
        if a.ndim == 4:
            a = a.reshape(a.shape[0] * a.shape[1], a.shape[2] * a.shape[3])
        return cls(ELASTIC_GENERAL, a)

    @property
    def k(self) -> int:
        return self.matrix.shape[0] // DIM

    @property
    def blocks(self) -> np.ndarray:
        """The form as A4[alpha, i, beta, j]."""
        return self.matrix.reshape(self.k, DIM, self.k, DIM)

    def scaled(self, c: float) -> ElasticModel:
        if not c > 0:
            raise InputDomainError("scale", c, "> 0")
        return dataclasses.replace(self, matrix=c * self.matrix)

    def with_weight(self, a: np.ndarray, h: float) -> ElasticModel:
        """Attach a nodal weight a(x) with ||1 - a||_C1 <= 1/2."""
        a = np.asarray(a, dtype=float)
        if a.ndim != DIM:
            raise InputDomainError("weight", a.shape, "one value per grid node")
        if a.min() < 0.5 or a.max() > 1.5:
            raise InputDomainError("weight", (float(a.min()), float(a.max())), "1/2 <= a <= 3/2")
        slope = max(float(np.abs(g).max()) for g in np.gradient(a, h))
        if (c1 := float(np.abs(1.0 - a).max()) + slope) > 0.5:
            raise InputDomainError("weight", c1, "||1 - a||_C1 <= 1/2")
        return dataclasses.replace(self, weight=a)

    def ellipticity(self) -> EllipticityReport:
        return EllipticityReport(self.lambda_min, self.Lambda_max)

    def density(self, G: np.ndarray) -> np.ndarray:
        """W(grad u) from gradients shaped (..., k, 3), without the weight."""
        return np.einsum("...ai,aibj,...bj->...", G, self.blocks, G)


def _trapezoid(n: int) -> np.ndarray:
    w = np.ones(n)
    w[0] = w[-1] = 0.5
    return w


def summed(values: np.ndarray, deterministic: bool = False) -> float:
    """Sum of all entries; math.fsum in a fixed order when deterministic."""
    if deterministic:
        return math.fsum(np.ravel(values).tolist())
    return float(np.sum(values))


def _edge_factor(shape: tuple[int, ...], axis: int) -> np.ndarray:
    parts = [np.ones(n - 1) if l == axis else _trapezoid(n) for l, n in enumerate(shape)]
    return np.einsum("i,j,k->ijk", *parts)


def _lo(n: int, axis: int) -> tuple[slice, ...]:
    return (slice(None),) * axis + (slice(0, n - 1),)


def _hi(n: int, axis: int) -> tuple[slice, ...]:
    return (slice(None),) * axis + (slice(1, n),)


def _average(d: np.ndarray, axis: int) -> np.ndarray:
    n = d.shape[axis]
    return 0.5 * (d[_lo(n, axis)] + d[_hi(n, axis)])


def _average_adjoint(p: np.ndarray, axis: int) -> np.ndarray:
    shape = list(p.shape)
    shape[axis] += 1
    out = np.zeros(shape)
    n = shape[axis]
    out[_lo(n, axis)] += 0.5 * p
    out[_hi(n, axis)] += 0.5 * p
    return out


def _diff_adjoint(p: np.ndarray, axis: int, h: float) -> np.ndarray:
    shape = list(p.shape)
    shape[axis] += 1
    out = np.zeros(shape)
    n = shape[axis]
    out[_lo(n, axis)] -= p / h
    out[_hi(n, axis)] += p / h
    return out


def _cell_gradients(u: np.ndarray, h: float) -> list[np.ndarray]:
    out = []
    for i in range(DIM):
        d = np.diff(u, axis=i) / h
        for l in range(DIM):
            if l != i:
                d = _average(d, l)
        out.append(d)
    return out


def _weights(model: ElasticModel, shape: tuple[int, ...]) -> np.ndarray | None:
    if model.weight is None:
        return None
    if model.weight.shape != shape:
        raise InputDomainError("weight", model.weight.shape, f"grid shape {shape}")
    return model.weight


def _check_grid(u: np.ndarray, model: ElasticModel) -> None:
    if u.ndim != DIM + 1 or u.shape[-1] != model.k:
        raise InputDomainError("values", u.shape, f"(nx, ny, nz, {model.k}) array")
    if min(u.shape[:DIM]) < MIN_NODES_PER_AXIS:
        raise InputDomainError("grid", u.shape[:DIM], f">= {MIN_NODES_PER_AXIS} nodes per axis")


def discrete_energy(values: np.ndarray, h: float, model: ElasticModel, deterministic: bool = False) -> float:
    """Discrete elastic energy of nodal values on a box of spacing h."""
    u = np.asarray(values, dtype=float)
    _check_grid(u, model)
    shape = u.shape[:DIM]
    a = _weights(model, shape)
    A4 = model.blocks
    total = 0.0
    for i in range(DIM):
        d = np.diff(u, axis=i) / h
        w = _edge_factor(shape, i)
        if a is not None:
            w = w * _average(a, i)
        total += summed(w * np.einsum("...a,ab,...b->...", d, A4[:, i, :, i], d), deterministic)
    cells = _cell_gradients(u, h)
    wc = None if a is None else _average(_average(_average(a, 0), 1), 2)
    for i in range(DIM):
        for j in range(DIM):
            if i != j:
                dens = np.einsum("...a,ab,...b->...", cells[i], A4[:, i, :, j], cells[j])
                total += summed(dens if wc is None else wc * dens, deterministic)
    return total * h**DIM


def operator_values(values: np.ndarray, h: float, model: ElasticModel) -> np.ndarray:
    """Gradient of discrete_energy divided by the node volume h^3."""
    u = np.asarray(values, dtype=float)
    _check_grid(u, model)
    shape = u.shape[:DIM]
    a = _weights(model, shape)
    A4 = model.blocks
    out = np.zeros_like(u)
    for i in range(DIM):
        d = np.diff(u, axis=i) / h
        w = _edge_factor(shape, i)
        if a is not None:
            w = w * _average(a, i)
        out += _diff_adjoint(2.0 * w[..., None] * (d @ A4[:, i, :, i]), i, h)
    cells = _cell_gradients(u, h)
    wc = None if a is None else _average(_average(_average(a, 0), 1), 2)[..., None]
    for j in range(DIM):
        p = sum(cells[i] @ A4[:, i, :, j] for i in range(DIM) if i != j)
        p = 2.0 * p if wc is None else 2.0 * wc * p
        for l in range(DIM):
            if l != j:
                p = _average_adjoint(p, l)
        out += _diff_adjoint(p, j, h)
    return out


def elastic_operator_apply(field: Field, model: ElasticModel) -> Field:
    """Discrete variational gradient of the elastic energy per unit node volume."""
    return field.with_values(operator_values(field.values, field.grid.h, model))
