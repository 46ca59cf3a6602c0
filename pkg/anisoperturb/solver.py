"""Minimization of E_eps (and the weak anchoring energy) by monotone gradient descent."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
import logging
from pathlib import Path

import numpy as np

from .const import (
    ANCHORING_DIRICHLET,
    ANCHORING_FREE,
    ANCHORING_WEAK,
    DEFAULT_ARMIJO,
    DEFAULT_GRAD_TOL_FACTOR,
    DEFAULT_INITIAL_STEP,
    DEFAULT_MAX_ITERS,
    DEFAULT_SHRINK,
    DEFAULT_SWEEP_COUNT,
    DEFAULT_SWEEP_RATIO,
    DIM,
    DOMAIN_BOX,
    MAX_HALVINGS,
    ON_MANIFOLD_TOL,
)
from .elastic import ElasticModel, discrete_energy, operator_values, summed
from .exceptions import AnisoPerturbError, InputDomainError, SolverStagnationError, SweepStageError
from .field import EnergyBreakdown, Field, Grid, h1_distance
from .manifold import Potential

_LOGGER = logging.getLogger(__name__)

LOG_COLUMNS = ["iter", "energy_total", "energy_elastic", "energy_potential", "max_residual", "step_size"]


@dataclass
class AnchoringSpec:
    """Boundary condition: Dirichlet data u_b, Rapini-Papoular weak anchoring, or free."""

    kind: str
    values: np.ndarray | None = None
    strength: float = 0.0
    g_bound: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in (ANCHORING_DIRICHLET, ANCHORING_WEAK, ANCHORING_FREE):
            raise InputDomainError("anchoring", self.kind, "dirichlet, weak or free")
        if self.kind != ANCHORING_FREE and self.values is None:
            raise InputDomainError("anchoring.values", None, f"{self.kind} anchoring needs boundary values")
        if self.strength < 0:
            raise InputDomainError("anchoring.strength", self.strength, "W0 >= 0")

    @classmethod
    def dirichlet(cls, values: np.ndarray) -> AnchoringSpec:
        return cls(ANCHORING_DIRICHLET, np.asarray(values, dtype=float))

    @classmethod
    def weak(cls, strength: float, values: np.ndarray) -> AnchoringSpec:
        return cls(ANCHORING_WEAK, np.asarray(values, dtype=float), float(strength))

    @classmethod
    def free(cls) -> AnchoringSpec:
        return cls(ANCHORING_FREE)

    def check(self, field: Field, potential: Potential) -> None:
        if self.values is None:
            return
        if self.values.shape != field.values.shape:
            raise InputDomainError("anchoring.values", self.values.shape, f"field shape {field.values.shape}")
        nodes = field.boundary_mask if self.kind == ANCHORING_DIRICHLET else field.grid.face_mask()
        if nodes.any() and (worst := float(np.max(potential.dist(self.values[nodes])))) > ON_MANIFOLD_TOL:
            raise InputDomainError("anchoring.values", worst, "boundary data on N within 1e-8")

    def fixed_mask(self, field: Field) -> np.ndarray:
        if self.kind == ANCHORING_DIRICHLET:
            return field.boundary_mask
        return np.zeros(field.grid.shape, dtype=bool)


@dataclass
class MinimizeConfig:
    """Parameters of one descent run."""

    epsilon: float
    max_iters: int = DEFAULT_MAX_ITERS
    grad_tol: float | None = None
    initial_step: float = DEFAULT_INITIAL_STEP
    armijo: float = DEFAULT_ARMIJO
    shrink: float = DEFAULT_SHRINK
    deterministic: bool = False

    def __post_init__(self) -> None:
        for name in ("epsilon", "max_iters", "initial_step", "armijo"):
            if not getattr(self, name) > 0:
                raise InputDomainError(name, getattr(self, name), "> 0")
        if self.grad_tol is not None and not self.grad_tol > 0:
            raise InputDomainError("grad_tol", self.grad_tol, "> 0")
        if not 0 < self.shrink < 1:
            raise InputDomainError("shrink", self.shrink, "0 < shrink < 1")


@dataclass
class SweepConfig:
    """Geometric epsilon schedule eps_k = eps0 * ratio^k."""

    epsilon0: float
    ratio: float = DEFAULT_SWEEP_RATIO
    count: int = DEFAULT_SWEEP_COUNT
    warm_start: bool = True

    def __post_init__(self) -> None:
        if not self.epsilon0 > 0:
            raise InputDomainError("epsilon0", self.epsilon0, "> 0")
        if not 0 < self.ratio < 1:
            raise InputDomainError("ratio", self.ratio, "0 < ratio < 1")
        if self.count < 1:
            raise InputDomainError("count", self.count, ">= 1")

    @property
    def schedule(self) -> list[float]:
        return [self.epsilon0 * self.ratio**k for k in range(self.count)]


@dataclass
class IterationRecord:
    iter: int
    energy_total: float
    energy_elastic: float
    energy_potential: float
    max_residual: float
    step_size: float

    def row(self) -> list[str]:
        return [str(self.iter)] + [f"{getattr(self, c):.12e}" for c in LOG_COLUMNS[1:]]


@dataclass
class IterationLog:
    """Accepted iterations of a descent run; energy_potential is the eps^-2 weighted part."""

    records: list[IterationRecord] = field(default_factory=list)
    converged: bool = False
    grad_tol: float = 0.0

    @property
    def energies(self) -> np.ndarray:
        return np.array([r.energy_total for r in self.records])

    @property
    def final_residual(self) -> float:
        return self.records[-1].max_residual

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as out:
            writer = csv.writer(out, lineterminator="\n")
            writer.writerow(LOG_COLUMNS)
            writer.writerows(r.row() for r in self.records)
        return path


@dataclass
class _Parts:
    elastic: float
    potential: float
    surface: float

    def total(self, epsilon: float) -> float:
        return self.elastic + self.potential / epsilon**2 + self.surface

    def __add__(self, other: _Parts) -> _Parts:
        return _Parts(self.elastic + other.elastic, self.potential + other.potential, self.surface + other.surface)


def _surface_weights(grid: Grid) -> np.ndarray:
    """Trapezoid area weights of every box face, summed where faces meet."""
    out = np.zeros(grid.shape)
    for axis in range(DIM):
        parts = []
        for l, n in enumerate(grid.shape):
            p = np.ones(n)
            if l == axis:
                p[1:-1] = 0.0
            else:
                p[0] = p[-1] = 0.5
            parts.append(p)
        out += np.einsum("i,j,k->ijk", *parts)
    return out * grid.h ** (DIM - 1)


class Functional:
    """Discrete total energy with its exact gradient per unit node volume."""

    def __init__(
        self, grid: Grid, epsilon: float, elastic: ElasticModel, potential: Potential, anchoring: AnchoringSpec, deterministic: bool = False
    ) -> None:
        if not epsilon > 0:
            raise InputDomainError("epsilon", epsilon, "> 0")
        if elastic.k != potential.k:
            raise InputDomainError("elastic.k", elastic.k, f"target dimension {potential.k}")
        self.grid = grid
        self.epsilon = epsilon
        self.elastic = elastic
        self.potential = potential
        self.anchoring = anchoring
        self.deterministic = deterministic
        parts = [np.ones(n) for n in grid.shape]
        for p in parts:
            p[0] = p[-1] = 0.5
        self.node_weights = np.einsum("i,j,k->ijk", *parts)[..., None]
        self.surface = None
        if anchoring.kind == ANCHORING_WEAK:
            if grid.kind != DOMAIN_BOX:
                raise InputDomainError("anchoring", anchoring.kind, "weak anchoring on box domains")
            self.surface = _surface_weights(grid)[..., None]

    def sum(self, values: np.ndarray) -> float:
        return summed(values, self.deterministic)

    def parts(self, u: np.ndarray) -> _Parts:
        vol = self.grid.node_volume
        elastic = discrete_energy(u, self.grid.h, self.elastic, self.deterministic)
        potential = vol * self.sum(self.node_weights[..., 0] * self.potential.f(u))
        surface = 0.0
        if self.surface is not None:
            surface = self.anchoring.strength * self.sum(self.surface * (u - self.anchoring.values) ** 2)
        return _Parts(elastic, potential, surface)

    def gradient(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(elastic operator, full residual), both per unit node volume."""
        el = operator_values(u, self.grid.h, self.elastic)
        res = el + self.node_weights * self.potential.grad(u) / self.epsilon**2
        if self.surface is not None:
            res = res + 2.0 * self.anchoring.strength * self.surface * (u - self.anchoring.values) / self.grid.node_volume
        return el, res

    def change(self, u: np.ndarray, d: np.ndarray, t: float, el_grad: np.ndarray) -> _Parts:
        """Parts(u + t d) - Parts(u), expanded so no term cancels against the energy itself."""
        vol = self.grid.node_volume
        elastic = t * vol * self.sum(el_grad * d) + t * t * discrete_energy(d, self.grid.h, self.elastic, self.deterministic)
        potential = vol * self.sum(self.node_weights[..., 0] * self.potential.difference(u, t * d))
        surface = 0.0
        if self.surface is not None:
            r = u - self.anchoring.values
            surface = self.anchoring.strength * self.sum(self.surface * (2.0 * t * r * d + t * t * d * d))
        return _Parts(elastic, potential, surface)


def el_residual(field: Field, epsilon: float, elastic: ElasticModel, potential: Potential, anchoring: AnchoringSpec) -> Field:
    """Discrete gradient of the total energy per node volume; zero on Dirichlet nodes."""
    _, res = Functional(field.grid, epsilon, elastic, potential, anchoring).gradient(field.values)
    res[anchoring.fixed_mask(field)] = 0.0
    return field.with_values(res)


def _breakdown(parts: _Parts, epsilon: float) -> EnergyBreakdown:
    return EnergyBreakdown(parts.elastic, parts.potential, parts.total(epsilon))


def discrete_breakdown(
    field: Field, epsilon: float, elastic: ElasticModel, potential: Potential, anchoring: AnchoringSpec, deterministic: bool = False
) -> EnergyBreakdown:
    """Energy of the discretization the descent minimizes; the total includes the anchoring term."""
    func = Functional(field.grid, epsilon, elastic, potential, anchoring, deterministic)
    return _breakdown(func.parts(field.values), epsilon)


def minimize(
    field_init: Field, config: MinimizeConfig, elastic: ElasticModel, potential: Potential, anchoring: AnchoringSpec
) -> tuple[Field, IterationLog]:
    """Steepest descent with Armijo backtracking from Barzilai-Borwein trial steps."""
    grid = field_init.grid
    diameter = grid.h * float(np.linalg.norm(np.asarray(grid.shape) - 1))
    if config.epsilon > diameter:
        raise InputDomainError("epsilon", config.epsilon, f"<= domain diameter {diameter:.4g}")
    anchoring.check(field_init, potential)
    fixed = anchoring.fixed_mask(field_init)
    u = field_init.values.copy()
    if anchoring.kind == ANCHORING_DIRICHLET:
        if not np.allclose(u[fixed], anchoring.values[fixed], rtol=0.0, atol=1e-12):
            raise InputDomainError("field_init", "boundary mismatch", "initial field equal to u_b on Dirichlet nodes")
        u[fixed] = anchoring.values[fixed]

    func = Functional(grid, config.epsilon, elastic, potential, anchoring, config.deterministic)
    eps2 = config.epsilon**2
    vol = grid.node_volume
    parts = func.parts(u)
    el_grad, g = func.gradient(u)
    g[fixed] = 0.0
    residual = float(np.max(np.linalg.norm(g, axis=-1)))
    volume = vol * float(np.sum(func.node_weights))
    grad_tol = config.grad_tol or DEFAULT_GRAD_TOL_FACTOR * max(1.0, parts.total(config.epsilon) / volume)
    log = IterationLog([IterationRecord(0, parts.total(config.epsilon), parts.elastic, parts.potential / eps2, residual, 0.0)], grad_tol=grad_tol)
    step = config.initial_step

    for it in range(1, config.max_iters + 1):
        if residual < grad_tol:
            log.converged = True
            break
        slope = vol * func.sum(g * g)
        trial = step
        for _ in range(MAX_HALVINGS + 1):
            delta = func.change(u, -g, trial, el_grad)
            if delta.total(config.epsilon) <= -config.armijo * trial * slope:
                break
            trial *= config.shrink
        else:
            raise SolverStagnationError(it, parts.total(config.epsilon), residual, trial)

        u_new = u - trial * g
        el_new, g_new = func.gradient(u_new)
        g_new[fixed] = 0.0
        s = u_new - u
        y = g_new - g
        sy = func.sum(s * y)
        step = func.sum(s * s) / sy if sy > 0 else 2.0 * trial
        u, g, el_grad = u_new, g_new, el_new
        parts = parts + delta
        residual = float(np.max(np.linalg.norm(g, axis=-1)))
        log.records.append(IterationRecord(it, parts.total(config.epsilon), parts.elastic, parts.potential / eps2, residual, trial))
        _LOGGER.debug(f"iter {it}: E={parts.total(config.epsilon):.10e} residual={residual:.3e} step={trial:.3e}")
    else:
        log.converged = residual < grad_tol

    if log.converged:
        _LOGGER.info(f"Converged after {len(log.records) - 1} iterations: E={parts.total(config.epsilon):.8e} residual={residual:.3e}")
    else:
        _LOGGER.warning(f"Stopped after {config.max_iters} iterations with residual {residual:.3e} >= {grad_tol:.3e}")
    return field_init.with_values(u), log


@dataclass
class SweepStage:
    """One stage of an epsilon sweep."""

    stage: int
    epsilon: float
    field: Field
    energy: EnergyBreakdown
    max_dist: float
    h1_increment: float | None
    log: IterationLog


def epsilon_sweep(
    sweep: SweepConfig,
    field_init: Field,
    base: MinimizeConfig,
    elastic: ElasticModel,
    potential: Potential,
    anchoring: AnchoringSpec,
) -> list[SweepStage]:
    """Minimize along the schedule, warm-starting each stage from the previous minimizer."""
    stages: list[SweepStage] = []
    current = field_init
    for k, eps in enumerate(sweep.schedule):
        _LOGGER.info(f"Sweep stage {k}: epsilon={eps:.6g}")
        config = MinimizeConfig(eps, base.max_iters, base.grad_tol, base.initial_step, base.armijo, base.shrink, base.deterministic)
        try:
            result, log = minimize(current if sweep.warm_start else field_init, config, elastic, potential, anchoring)
        except AnisoPerturbError as err:
            raise SweepStageError(k, eps, err) from err
        increment = h1_distance(result, stages[-1].field) if stages else None
        breakdown = discrete_breakdown(result, eps, elastic, potential, anchoring, base.deterministic)
        stages.append(SweepStage(k, eps, result, breakdown, float(np.max(potential.dist(result.values))), increment, log))
        current = result
    return stages
