"""Experiment configuration: YAML document, voluptuous schema, cross-checks and builders."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from functools import cache
import hashlib
import json
import logging
from pathlib import Path
from typing import Any

import numpy as np
import voluptuous as vol
import yaml

from .const import (
    ANCHORING_DIRICHLET,
    ANCHORING_FREE,
    ANCHORING_WEAK,
    CONF_A2,
    CONF_ALPHA,
    CONF_ANCHORING,
    CONF_ARMIJO,
    CONF_B2,
    CONF_BOUNDARY_POINT,
    CONF_BOUNDARY_RADII,
    CONF_C2,
    CONF_CENTERS,
    CONF_COEFFICIENTS,
    CONF_COUNT,
    CONF_DATA,
    CONF_DELTA,
    CONF_DELTA1,
    CONF_DETERMINISTIC,
    CONF_DIAGNOSTICS,
    CONF_DIRECTOR,
    CONF_DIRECTORY,
    CONF_DOMAIN,
    CONF_ELASTIC,
    CONF_EPSILON,
    CONF_EPSILON0,
    CONF_EPSILON_FACTOR,
    CONF_ETA,
    CONF_EXCLUSION_RADIUS,
    CONF_GRAD_TOL,
    CONF_GROWTH_A,
    CONF_GROWTH_P,
    CONF_H,
    CONF_INIT,
    CONF_INITIAL_STEP,
    CONF_KAPPA,
    CONF_KIND,
    CONF_L,
    CONF_LAYERS,
    CONF_LEVELS,
    CONF_LUCKHAUS,
    CONF_M_BOUND,
    CONF_MAX_ITERS,
    CONF_MODEL,
    CONF_N,
    CONF_NORMAL_PERTURBATION,
    CONF_OUTPUT,
    CONF_PERTURBATION,
    CONF_POTENTIAL,
    CONF_RADII,
    CONF_RADIUS,
    CONF_RATIO,
    CONF_SAMPLES,
    CONF_SCALE,
    CONF_SEED,
    CONF_SHRINK,
    CONF_SOLVER,
    CONF_STRENGTH,
    CONF_SWEEP,
    CONF_TAU,
    CONF_THETA,
    CONF_VTK,
    CONF_WARM_START,
    DATA_HEDGEHOG,
    DATA_ROTATING,
    DATA_UNIFORM,
    DEFAULT_ALPHA,
    DEFAULT_ARMIJO,
    DEFAULT_DELTA,
    DEFAULT_DELTA1,
    DEFAULT_EPSILON_FACTOR,
    DEFAULT_ETA,
    DEFAULT_FACE_SAMPLES,
    DEFAULT_GROWTH_A,
    DEFAULT_GROWTH_P,
    DEFAULT_H,
    DEFAULT_INITIAL_STEP,
    DEFAULT_LAYERS,
    DEFAULT_LEVELS,
    DEFAULT_M,
    DEFAULT_MAX_ITERS,
    DEFAULT_NODES,
    DEFAULT_NORMAL_PERTURBATION,
    DEFAULT_OUTPUT_DIR,
    DEFAULT_PERTURBATION,
    DEFAULT_SEED,
    DEFAULT_SHRINK,
    DEFAULT_SWEEP_COUNT,
    DEFAULT_SWEEP_RATIO,
    DEFAULT_THETA,
    DOMAIN_BALL,
    DOMAIN_BOX,
    DOMAIN_HALF_BALL,
    ELASTIC_GENERAL,
    ELASTIC_ISOTROPIC,
    ELASTIC_LDG,
    INIT_DATA,
    INIT_RADIAL,
    MAX_LEVEL,
    MIN_GROWTH_P,
    MIN_LEVEL,
    MIN_NODES_PER_AXIS,
    MIN_RADIUS_CELLS,
    POTENTIAL_GL,
    POTENTIAL_LDG,
)
from .elastic import ElasticModel
from .exceptions import AnisoPerturbError, ConfigError
from .field import Grid
from .manifold import GrowthParams, Potential
from .problems import Problem, boundary_data, build_problem
from .solver import MinimizeConfig, SweepConfig

_LOGGER = logging.getLogger(__name__)

# epsilon defaults to this fraction of the domain radius
DEFAULT_EPSILON_FRACTION = 0.125

_POSITIVE = vol.All(vol.Coerce(float), vol.Range(min=0.0, min_included=False))
_NONNEGATIVE = vol.All(vol.Coerce(float), vol.Range(min=0.0))
_POINT = vol.All([vol.Coerce(float)], vol.Length(min=3, max=3))


def _parity(remainder: int):
    def check(value: int) -> int:
        if value % 2 != remainder:
            raise vol.Invalid(f"expected an {'even' if remainder == 0 else 'odd'} number")
        return value

    return check


POTENTIAL_SCHEMA = vol.Schema(
    {
        vol.Required(CONF_KIND): vol.In([POTENTIAL_LDG, POTENTIAL_GL]),
        vol.Optional(CONF_A2): _POSITIVE,
        vol.Optional(CONF_B2): _POSITIVE,
        vol.Optional(CONF_C2): _POSITIVE,
        vol.Optional(CONF_GROWTH_P, default=DEFAULT_GROWTH_P): vol.All(vol.Coerce(float), vol.Range(min=MIN_GROWTH_P, min_included=False)),
        vol.Optional(CONF_GROWTH_A, default=DEFAULT_GROWTH_A): vol.All(vol.Coerce(float), vol.Range(min=0.5, max=0.8)),
    }
)

ELASTIC_SCHEMA = vol.Schema(
    {
        vol.Required(CONF_KIND): vol.In([ELASTIC_LDG, ELASTIC_ISOTROPIC, ELASTIC_GENERAL]),
        vol.Optional(CONF_L): _POINT,
        vol.Optional(CONF_SCALE, default=1.0): _POSITIVE,
        vol.Optional(CONF_COEFFICIENTS): [[vol.Coerce(float)]],
    }
)

MODEL_SCHEMA = vol.Schema({vol.Required(CONF_POTENTIAL): POTENTIAL_SCHEMA, vol.Required(CONF_ELASTIC): ELASTIC_SCHEMA})

DOMAIN_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_KIND, default=DOMAIN_BALL): vol.In([DOMAIN_BOX, DOMAIN_BALL, DOMAIN_HALF_BALL]),
        vol.Optional(CONF_N, default=DEFAULT_NODES): vol.All(vol.Coerce(int), vol.Range(min=MIN_NODES_PER_AXIS)),
        vol.Optional(CONF_H, default=DEFAULT_H): _POSITIVE,
        vol.Optional(CONF_RADIUS): _POSITIVE,
    }
)

ANCHORING_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_KIND, default=ANCHORING_DIRICHLET): vol.In([ANCHORING_DIRICHLET, ANCHORING_WEAK, ANCHORING_FREE]),
        vol.Optional(CONF_DATA, default=DATA_HEDGEHOG): vol.In([DATA_HEDGEHOG, DATA_UNIFORM, DATA_ROTATING]),
        vol.Optional(CONF_DIRECTOR, default=[0.0, 0.0, 1.0]): _POINT,
        vol.Optional(CONF_KAPPA, default=0.0): vol.Coerce(float),
        vol.Optional(CONF_STRENGTH, default=0.0): vol.Coerce(float),
        vol.Optional(CONF_INIT, default=INIT_DATA): vol.In([INIT_DATA, INIT_RADIAL]),
    }
)

SOLVER_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_EPSILON): _POSITIVE,
        vol.Optional(CONF_MAX_ITERS, default=DEFAULT_MAX_ITERS): vol.All(vol.Coerce(int), vol.Range(min=1)),
        vol.Optional(CONF_GRAD_TOL): _POSITIVE,
        vol.Optional(CONF_INITIAL_STEP, default=DEFAULT_INITIAL_STEP): _POSITIVE,
        vol.Optional(CONF_ARMIJO, default=DEFAULT_ARMIJO): vol.All(vol.Coerce(float), vol.Range(min=0.0, max=1.0, min_included=False, max_included=False)),
        vol.Optional(CONF_SHRINK, default=DEFAULT_SHRINK): vol.All(vol.Coerce(float), vol.Range(min=0.0, max=1.0, min_included=False, max_included=False)),
    }
)

SWEEP_SCHEMA = vol.Schema(
    {
        vol.Required(CONF_EPSILON0): _POSITIVE,
        vol.Optional(CONF_RATIO, default=DEFAULT_SWEEP_RATIO): vol.Coerce(float),
        vol.Optional(CONF_COUNT, default=DEFAULT_SWEEP_COUNT): vol.All(vol.Coerce(int), vol.Range(min=1)),
        vol.Optional(CONF_WARM_START, default=True): bool,
    }
)

DIAGNOSTICS_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_CENTERS, default=[[0.0, 0.0, 0.0]]): [_POINT],
        vol.Optional(CONF_RADII, default=[]): [_POSITIVE],
        vol.Optional(CONF_THETA, default=DEFAULT_THETA): vol.All(vol.Coerce(float), vol.Range(min=0.0, max=0.5, min_included=False)),
        vol.Optional(CONF_ALPHA, default=DEFAULT_ALPHA): vol.All(vol.Coerce(float), vol.Range(min=0.0, max=1.0, min_included=False)),
        vol.Optional(CONF_DELTA, default=DEFAULT_DELTA): _POSITIVE,
        vol.Optional(CONF_TAU): _POSITIVE,
        vol.Optional(CONF_EXCLUSION_RADIUS): _POSITIVE,
        vol.Optional(CONF_M_BOUND, default=DEFAULT_M): _POSITIVE,
        vol.Optional(CONF_BOUNDARY_POINT): _POINT,
        vol.Optional(CONF_BOUNDARY_RADII, default=[]): [_POSITIVE],
    }
)

LUCKHAUS_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_LEVELS, default=list(DEFAULT_LEVELS)): [vol.All(vol.Coerce(int), vol.Range(min=MIN_LEVEL, max=MAX_LEVEL))],
        vol.Optional(CONF_SAMPLES, default=DEFAULT_FACE_SAMPLES): vol.All(vol.Coerce(int), vol.Range(min=4), _parity(0)),
        vol.Optional(CONF_LAYERS, default=DEFAULT_LAYERS): vol.All(vol.Coerce(int), vol.Range(min=3), _parity(1)),
        vol.Optional(CONF_DELTA1, default=DEFAULT_DELTA1): _POSITIVE,
        vol.Optional(CONF_ETA, default=DEFAULT_ETA): _POSITIVE,
        vol.Optional(CONF_EPSILON_FACTOR, default=DEFAULT_EPSILON_FACTOR): vol.All(vol.Coerce(float), vol.Range(min=0.0, max=1.0, min_included=False)),
        vol.Optional(CONF_PERTURBATION, default=DEFAULT_PERTURBATION): _NONNEGATIVE,
        vol.Optional(CONF_NORMAL_PERTURBATION, default=DEFAULT_NORMAL_PERTURBATION): _NONNEGATIVE,
    }
)

OUTPUT_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_DIRECTORY, default=DEFAULT_OUTPUT_DIR): str,
        vol.Optional(CONF_VTK, default=True): bool,
        vol.Optional(CONF_DETERMINISTIC, default=False): bool,
        vol.Optional(CONF_SEED, default=DEFAULT_SEED): vol.All(vol.Coerce(int), vol.Range(min=0)),
    }
)

CONFIG_SCHEMA = vol.Schema(
    {
        vol.Required(CONF_MODEL): MODEL_SCHEMA,
        vol.Optional(CONF_DOMAIN, default={}): DOMAIN_SCHEMA,
        vol.Optional(CONF_ANCHORING, default={}): ANCHORING_SCHEMA,
        vol.Optional(CONF_SOLVER, default={}): SOLVER_SCHEMA,
        vol.Optional(CONF_SWEEP): SWEEP_SCHEMA,
        vol.Optional(CONF_DIAGNOSTICS, default={}): DIAGNOSTICS_SCHEMA,
        vol.Optional(CONF_LUCKHAUS, default={}): LUCKHAUS_SCHEMA,
        vol.Optional(CONF_OUTPUT, default={}): OUTPUT_SCHEMA,
    }
)


@cache
def messages() -> dict[str, Any]:
    return json.loads((Path(__file__).parent / "strings.json").read_text(encoding="utf-8"))


def message(key: str) -> str:
    return messages()["config"]["error"][key]


def _key_lines(node: yaml.Node | None, path: tuple = (), out: dict | None = None) -> dict[tuple, int]:
    """1-based line of every key path in a composed YAML document."""
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            sub = (*path, key.value)
            out[sub] = key.start_mark.line + 1
            _key_lines(value, sub, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, value in enumerate(node.value):
            out[(*path, i)] = value.start_mark.line + 1
            _key_lines(value, (*path, i), out)
    return out


def _line_of(lines: dict[tuple, int], path: tuple) -> int | None:
    while path:
        if path in lines:
            return lines[path]
        path = path[:-1]
    return None


def _dotted(path: list) -> str:
    return ".".join(str(p) for p in path)


@dataclass
class ExperimentConfig:
    """Validated experiment document with builders for the run objects."""

    data: dict[str, Any]
    source: str = ""
    path: Path | None = None
    overrides: dict[str, Any] = field(default_factory=dict)

    @property
    def sha256(self) -> str:
        text = (self.source or json.dumps(self.data, sort_keys=True)) + json.dumps(self.overrides, sort_keys=True)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def section(self, name: str) -> dict[str, Any]:
        return self.data.get(name) or {}

    @property
    def deterministic(self) -> bool:
        return self.data[CONF_OUTPUT][CONF_DETERMINISTIC]

    @property
    def vtk(self) -> bool:
        return self.data[CONF_OUTPUT][CONF_VTK]

    @property
    def output_dir(self) -> Path:
        return Path(self.data[CONF_OUTPUT][CONF_DIRECTORY])

    @property
    def seed(self) -> int:
        return self.data[CONF_OUTPUT][CONF_SEED]

    def potential(self) -> Potential:
        conf = self.data[CONF_MODEL][CONF_POTENTIAL]
        if conf[CONF_KIND] == POTENTIAL_GL:
            return Potential.ginzburg_landau()
        return Potential.landau_de_gennes(conf[CONF_A2], conf[CONF_B2], conf[CONF_C2])

    def growth_params(self) -> GrowthParams:
        conf = self.data[CONF_MODEL][CONF_POTENTIAL]
        return GrowthParams(conf[CONF_GROWTH_P], conf[CONF_GROWTH_A])

    def elastic(self, potential: Potential | None = None) -> ElasticModel:
        conf = self.data[CONF_MODEL][CONF_ELASTIC]
        potential = potential or self.potential()
        if conf[CONF_KIND] == ELASTIC_LDG:
            model = ElasticModel.ldg(*conf[CONF_L])
        elif conf[CONF_KIND] == ELASTIC_GENERAL:
            model = ElasticModel.general(np.asarray(conf[CONF_COEFFICIENTS]))
        else:
            model = ElasticModel.isotropic(potential.k)
        return model if conf[CONF_SCALE] == 1.0 else model.scaled(conf[CONF_SCALE])

    @property
    def domain_radius(self) -> float:
        conf = self.data[CONF_DOMAIN]
        return conf.get(CONF_RADIUS) or 0.5 * (conf[CONF_N] - 1) * conf[CONF_H]

    def grid(self) -> Grid:
        conf = self.data[CONF_DOMAIN]
        radius = None if conf[CONF_KIND] == DOMAIN_BOX else self.domain_radius
        return Grid.centered(conf[CONF_N], conf[CONF_H], conf[CONF_KIND], radius)

    def problem(self, grid: Grid | None = None, potential: Potential | None = None) -> Problem:
        conf = self.data[CONF_ANCHORING]
        grid = grid or self.grid()
        potential = potential or self.potential()
        data = boundary_data(conf[CONF_DATA], potential, np.asarray(conf[CONF_DIRECTOR]), conf[CONF_KAPPA])
        return build_problem(grid, potential, data, conf[CONF_KIND], conf[CONF_STRENGTH], conf[CONF_INIT])

    @property
    def epsilon(self) -> float:
        return self.data[CONF_SOLVER].get(CONF_EPSILON) or DEFAULT_EPSILON_FRACTION * self.domain_radius

    def minimize_config(self, epsilon: float | None = None) -> MinimizeConfig:
        conf = self.data[CONF_SOLVER]
        return MinimizeConfig(
            epsilon or self.epsilon,
            conf[CONF_MAX_ITERS],
            conf.get(CONF_GRAD_TOL),
            conf[CONF_INITIAL_STEP],
            conf[CONF_ARMIJO],
            conf[CONF_SHRINK],
            self.deterministic,
        )

    def sweep_config(self) -> SweepConfig:
        """Configured schedule, or four stages eps_k = (R/4) 2^-k checked against the grid."""
        conf = self.data.get(CONF_SWEEP)
        if conf is None:
            sweep = SweepConfig(0.25 * self.domain_radius)
            if (violation := _resolution_violation(sweep.schedule[-1], self.data[CONF_DOMAIN][CONF_H], CONF_SWEEP)) is not None:
                raise ConfigError(message("validation_failed"), key=CONF_SWEEP, violations=[violation])
            return sweep
        return SweepConfig(conf[CONF_EPSILON0], conf[CONF_RATIO], conf[CONF_COUNT], conf[CONF_WARM_START])

    @property
    def diagnostics(self) -> dict[str, Any]:
        return self.data[CONF_DIAGNOSTICS]

    @property
    def luckhaus(self) -> dict[str, Any]:
        return self.data[CONF_LUCKHAUS]

    def radii(self, grid: Grid, center: np.ndarray) -> list[float]:
        """Configured radii, or dyadic multiples of 4h that fit the grid around the center."""
        if radii := self.diagnostics[CONF_RADII]:
            return list(radii)
        out, r = [], MIN_RADIUS_CELLS * grid.h
        while grid.contains_ball(center, r):
            out.append(r)
            r *= 2.0
        return out

    @property
    def exclusion_radius(self) -> float:
        return self.diagnostics.get(CONF_EXCLUSION_RADIUS) or 0.25 * self.domain_radius

    def with_overrides(
        self,
        epsilon: float | None = None,
        levels: int | None = None,
        center: list[float] | None = None,
        boundary_point: list[float] | None = None,
        out: str | None = None,
        deterministic: bool = False,
    ) -> ExperimentConfig:
        """Copy with command line overrides applied and validated again."""
        data = copy.deepcopy(self.data)
        applied = {k: v for k, v in (("epsilon", epsilon), ("levels", levels), ("center", center), ("boundary_point", boundary_point), ("out", out)) if v is not None}
        if deterministic:
            applied["deterministic"] = True
        if epsilon is not None:
            data[CONF_SOLVER][CONF_EPSILON] = epsilon
        if levels is not None:
            data[CONF_LUCKHAUS][CONF_LEVELS] = list(range(MIN_LEVEL, MIN_LEVEL + levels))
        if center is not None:
            data[CONF_DIAGNOSTICS][CONF_CENTERS] = [list(center)]
        if boundary_point is not None:
            data[CONF_DIAGNOSTICS][CONF_BOUNDARY_POINT] = list(boundary_point)
        if out is not None:
            data[CONF_OUTPUT][CONF_DIRECTORY] = out
        if deterministic:
            data[CONF_OUTPUT][CONF_DETERMINISTIC] = True
        return ExperimentConfig(_validate_document(data), self.source, self.path, {**self.overrides, **applied})


def _resolution_violation(epsilon: float, h: float, key: str = f"{CONF_SOLVER}.{CONF_EPSILON}") -> str | None:
    if epsilon < 2.0 * h:
        return f"{key}: {message('epsilon_resolution')} ({epsilon:g} < {2.0 * h:g})"
    return None


def validate(data: dict[str, Any]) -> list[str]:
    """Cross-field conditions the schema cannot express; one message per violated condition."""
    violations: list[str] = []
    potential_conf = data[CONF_MODEL][CONF_POTENTIAL]
    elastic_conf = data[CONF_MODEL][CONF_ELASTIC]
    domain = data[CONF_DOMAIN]

    if potential_conf[CONF_KIND] == POTENTIAL_LDG:
        if any(potential_conf.get(key) is None for key in (CONF_A2, CONF_B2, CONF_C2)):
            violations.append(f"{CONF_MODEL}.{CONF_POTENTIAL}: {message('ldg_parameters')}")
        else:
            try:
                Potential.landau_de_gennes(potential_conf[CONF_A2], potential_conf[CONF_B2], potential_conf[CONF_C2])
            except AnisoPerturbError as err:
                violations.append(f"{CONF_MODEL}.{CONF_POTENTIAL}: {message('degenerate_potential')} ({err})")

    if elastic_conf[CONF_KIND] == ELASTIC_LDG:
        if CONF_L not in elastic_conf:
            violations.append(f"{CONF_MODEL}.{CONF_ELASTIC}: {message('ldg_elastic_constants')}")
        else:
            L1, L2, L3 = elastic_conf[CONF_L]
            if potential_conf[CONF_KIND] != POTENTIAL_LDG:
                violations.append(f"{CONF_MODEL}.{CONF_ELASTIC}: {message('ldg_elastic_target')}")
            for key, lhs in (("positivity_l1_l2", L1 + L2), ("positivity_2l1_l2", 2 * L1 - L2), ("positivity_vector", 6 * L1 + L2 + 10 * L3)):
                if not lhs > 0:
                    violations.append(f"{CONF_MODEL}.{CONF_ELASTIC}.{CONF_L}: {message(key)} (lhs={lhs:g})")
    elif elastic_conf[CONF_KIND] == ELASTIC_GENERAL:
        coeffs = elastic_conf.get(CONF_COEFFICIENTS)
        k = 5 if potential_conf[CONF_KIND] == POTENTIAL_LDG else 3
        a = np.asarray(coeffs, dtype=float) if coeffs else None
        if a is None or a.shape != (3 * k, 3 * k) or not np.allclose(a, a.T):
            violations.append(f"{CONF_MODEL}.{CONF_ELASTIC}.{CONF_COEFFICIENTS}: {message('general_coefficients')}")
        elif np.linalg.eigvalsh(a)[0] <= 0:
            violations.append(f"{CONF_MODEL}.{CONF_ELASTIC}.{CONF_COEFFICIENTS}: {message('ellipticity')}")

    half_extent = 0.5 * (domain[CONF_N] - 1) * domain[CONF_H]
    if domain[CONF_KIND] != DOMAIN_BOX and (radius := domain.get(CONF_RADIUS)) is not None and radius > half_extent + 1e-12:
        violations.append(f"{CONF_DOMAIN}.{CONF_RADIUS}: {message('radius_too_large')} ({radius:g} > {half_extent:g})")

    anchoring = data[CONF_ANCHORING]
    if anchoring[CONF_STRENGTH] < 0:
        violations.append(f"{CONF_ANCHORING}.{CONF_STRENGTH}: {message('strength_negative')}")
    if anchoring[CONF_KIND] == ANCHORING_WEAK and domain[CONF_KIND] != DOMAIN_BOX:
        violations.append(f"{CONF_ANCHORING}.{CONF_KIND}: {message('weak_anchoring_box')}")

    h = domain[CONF_H]
    epsilons = [data[CONF_SOLVER].get(CONF_EPSILON) or DEFAULT_EPSILON_FRACTION * (domain.get(CONF_RADIUS) or half_extent)]
    if (sweep := data.get(CONF_SWEEP)) is not None:
        if not 0.0 < sweep[CONF_RATIO] < 1.0:
            violations.append(f"{CONF_SWEEP}.{CONF_RATIO}: {message('schedule_not_decreasing')} (ratio={sweep[CONF_RATIO]:g})")
        else:
            epsilons.append(sweep[CONF_EPSILON0] * sweep[CONF_RATIO] ** (sweep[CONF_COUNT] - 1))
    if (violation := _resolution_violation(min(epsilons), h)) is not None:
        violations.append(violation)
    return violations


def _validate_document(document: Any, lines: dict[tuple, int] | None = None) -> dict[str, Any]:
    lines = lines or {}
    if not isinstance(document, dict):
        raise ConfigError(message("invalid_document"))
    try:
        data = CONFIG_SCHEMA(document)
    except vol.MultipleInvalid as err:
        first = err.errors[0]
        violations = [f"{_dotted(e.path)}: {e.msg}" + (f" (line {line})" if (line := _line_of(lines, tuple(e.path))) else "") for e in err.errors]
        raise ConfigError(message("invalid_config"), _dotted(first.path), _line_of(lines, tuple(first.path)), violations) from err
    if violations := validate(data):
        raise ConfigError(message("validation_failed"), violations=violations)
    return data


def parse_config(text: str, path: Path | None = None) -> ExperimentConfig:
    try:
        document = yaml.safe_load(text)
        lines = _key_lines(yaml.compose(text))
    except yaml.MarkedYAMLError as err:
        mark = err.problem_mark or err.context_mark
        raise ConfigError(f"{message('invalid_yaml')}: {err.problem}", line=mark.line + 1 if mark else None) from err
    except yaml.YAMLError as err:
        raise ConfigError(f"{message('invalid_yaml')}: {err}") from err
    data = _validate_document(document, lines)
    _LOGGER.debug(f"Configuration {path or '<text>'} validated")
    return ExperimentConfig(data, text, path)


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"Cannot read configuration: {err}", key=str(path)) from err
    return parse_config(text, path)

