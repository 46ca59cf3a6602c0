"""Command line experiment runner."""

from __future__ import annotations

import argparse
from collections.abc import Callable
import contextlib
import csv
from dataclasses import asdict, dataclass, field
import logging
from pathlib import Path
import sys

import colorlog
import numpy as np
from scipy import fft

from .config import ExperimentConfig, load_config, message, messages
from .const import (
    ANCHORING_WEAK,
    CONF_ALPHA,
    CONF_BOUNDARY_POINT,
    CONF_BOUNDARY_RADII,
    CONF_CENTERS,
    CONF_DELTA,
    CONF_DELTA1,
    CONF_EPSILON_FACTOR,
    CONF_ETA,
    CONF_LAYERS,
    CONF_LEVELS,
    CONF_M_BOUND,
    CONF_NORMAL_PERTURBATION,
    CONF_PERTURBATION,
    CONF_SAMPLES,
    CONF_TAU,
    CONF_THETA,
    DEFAULT_GROWTH_RADII,
    DEFAULT_TUBE_SAMPLES,
    DOMAIN,
    EXIT_CONFIG,
    EXIT_DIAGNOSTICS,
    EXIT_OK,
    EXIT_SOLVER,
)
from .diagnostics import (
    CampanatoReport,
    DecayReport,
    boundary_decay_profile,
    campanato_holder,
    convergence_report,
    decay_profile,
    detect_defects,
    large_scale_ratio,
)
from .elastic import ElasticModel, PositivityReport, check_positivity
from .exceptions import (
    AnisoPerturbError,
    ConfigError,
    GeometryError,
    InputDomainError,
    SolverSetupError,
    SolverStagnationError,
    SweepStageError,
)
from .field import Field
from .luckhaus import build_sphere_mesh, scaling_study
from .manifold import GrowthReport, Potential, TubeReport, check_growth_conditions, tube_constants
from .problems import perturbed_constant
from .reports import (
    BOUNDARY_DECAY_COLUMNS,
    CONVERGENCE_COLUMNS,
    DECAY_COLUMNS,
    EXPONENT_COLUMNS,
    MANIFEST_NAME,
    SCALING_COLUMNS,
    SWEEP_COLUMNS,
    RunManifest,
    package_version,
    read_manifest,
    write_csv,
    write_json,
)
from .snapshot import read_snapshot, write_snapshot, write_vtk
from .solver import AnchoringSpec, discrete_breakdown, epsilon_sweep, minimize

_LOGGER = logging.getLogger(__name__)

COMMAND_VALIDATE = "validate"
COMMAND_MINIMIZE = "minimize"
COMMAND_SWEEP = "sweep"
COMMAND_DECAY = "decay"
COMMAND_BOUNDARY_DECAY = "boundary-decay"
COMMAND_EXTEND = "extend"
COMMAND_REPORT = "report"


@dataclass
class ValidationReport:
    """Measured model constants and the conditions they violate."""

    lambda_min: float
    Lambda_max: float
    condition: float
    s_star: float
    vacuum_radius: float
    tube: TubeReport
    growth: GrowthReport | None
    positivity: PositivityReport | None = None
    violations: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        if self.positivity is not None:
            out["positivity"]["agrees"] = self.positivity.agrees
        out["tube"]["passed"] = self.tube.passed
        return out


def validate_config(config: ExperimentConfig) -> ValidationReport:
    """Positivity, ellipticity bounds, tube comparability and growth of the configured model."""
    violations = []
    potential = config.potential()
    elastic = config.elastic(potential)
    positivity = None
    if elastic.L is not None:
        positivity = check_positivity(*elastic.L)
        if not positivity.agrees:
            violations.append(f"positivity verdict disagrees with the smallest eigenvalue {positivity.min_eigenvalue:.3e}")
    ellipticity = elastic.ellipticity()
    if ellipticity.lambda_min <= 0:
        violations.append(message("ellipticity"))
    tube = tube_constants(potential, DEFAULT_TUBE_SAMPLES, config.seed)
    if not tube.passed:
        violations.append(f"{message('tube_constants')} (c1={tube.c1:.4g}, c2={tube.c2:.4g})")
    growth = None
    try:
        growth = check_growth_conditions(potential, config.growth_params(), [r * potential.s_star for r in DEFAULT_GROWTH_RADII], seed=config.seed)
        if not growth.passed:
            violations.append(f"{message('growth_conditions')} (slopes {growth.grad_slope:.3g}, {growth.power_slope:.3g})")
    except AnisoPerturbError as err:
        violations.append(f"{message('growth_conditions')}: {err}")
    report = ValidationReport(
        ellipticity.lambda_min,
        ellipticity.Lambda_max,
        ellipticity.condition,
        potential.s_star,
        potential.vacuum_radius,
        tube,
        growth,
        positivity,
        violations,
    )
    _LOGGER.info(f"lambda={report.lambda_min:.6g} Lambda={report.Lambda_max:.6g} s*={report.s_star:.10g}")
    if positivity is not None:
        _LOGGER.info(f"positivity margin={positivity.margin:.6g} min eigenvalue={positivity.min_eigenvalue:.6g}")
    _LOGGER.info(f"tube c1={tube.c1:.6g} c2={tube.c2:.6g}")
    return report


@dataclass
class RunContext:
    """Objects shared by the pipelines of one run."""

    config: ExperimentConfig
    out: Path
    manifest: RunManifest
    potential: Potential
    elastic: ElasticModel
    vtk: bool = True
    field_path: Path | None = None

    def output(self, name: str) -> Path:
        return self.out / name

    def record_model(self) -> None:
        ell = self.elastic.ellipticity()
        tube = tube_constants(self.potential, DEFAULT_TUBE_SAMPLES, self.config.seed)
        self.manifest.record(lambda_min=ell.lambda_min, Lambda_max=ell.Lambda_max, s_star=self.potential.s_star, tube_c1=tube.c1, tube_c2=tube.c2)


def _write_field(ctx: RunContext, name: str, fld: Field) -> None:
    ctx.manifest.add_output(write_snapshot(ctx.output(f"{name}.snap"), fld))
    if ctx.vtk:
        ctx.manifest.add_output(write_vtk(ctx.output(f"{name}.vtk"), fld, ctx.potential, title=f"{DOMAIN} {name}"))


def _write_defects(ctx: RunContext, fld: Field) -> int:
    defects = detect_defects(fld, ctx.potential, ctx.config.diagnostics.get(CONF_TAU))
    ctx.manifest.add_output(write_json(ctx.output("defects.json"), defects.to_dict()))
    return len(defects.components)


def _solve(ctx: RunContext) -> tuple[Field, AnchoringSpec, float]:
    problem = ctx.config.problem(potential=ctx.potential)
    settings = ctx.config.minimize_config()
    try:
        result, log = minimize(problem.field, settings, ctx.elastic, ctx.potential, problem.anchoring)
    except InputDomainError as err:
        raise SolverSetupError(err) from err
    ctx.manifest.add_output(log.write_csv(ctx.output("iterations.csv")))
    ctx.manifest.record(epsilon=settings.epsilon, converged=log.converged, final_residual=log.final_residual, grad_tol=log.grad_tol)
    return result, problem.anchoring, settings.epsilon


def _field_for_diagnostics(ctx: RunContext) -> tuple[Field, AnchoringSpec | None, float]:
    if ctx.field_path is None:
        return _solve(ctx)
    fld = read_snapshot(ctx.field_path)
    _LOGGER.info(f"Loaded field {ctx.field_path} on grid {fld.grid.shape}")
    anchoring = ctx.config.problem(fld.grid, ctx.potential).anchoring
    return fld, anchoring, ctx.config.epsilon


def _exponent_row(report: DecayReport, ratio: float | None, campanato: CampanatoReport) -> dict:
    row = report.summary()
    row.update(large_scale_ratio=ratio, campanato=campanato.value, holder_quotient=campanato.quotient, diverging=campanato.diverging)
    return row


def _decay(ctx: RunContext, fld: Field, epsilon: float) -> None:
    diag = ctx.config.diagnostics
    deterministic = ctx.config.deterministic
    decay_rows, exponent_rows = [], []
    for center in diag[CONF_CENTERS]:
        c = np.asarray(center, dtype=float)
        report = decay_profile(fld, epsilon, ctx.elastic, ctx.potential, c, ctx.config.radii(fld.grid, c), diag[CONF_DELTA], deterministic)
        decay_rows += [{"center": report.center, **row} for row in report.rows()]
        try:
            ratio = large_scale_ratio(fld, epsilon, ctx.elastic, ctx.potential, c, diag[CONF_THETA])
        except GeometryError as err:
            _LOGGER.warning(f"Large scale ratio skipped at {tuple(c)}: {err}")
            ratio = None
        campanato = campanato_holder(fld, (c, max(report.radii)), diag[CONF_ALPHA], seed=ctx.config.seed)
        exponent_rows.append(_exponent_row(report, ratio, campanato))
    ctx.manifest.add_output(write_csv(ctx.output("decay.csv"), DECAY_COLUMNS, decay_rows))
    ctx.manifest.add_output(write_csv(ctx.output("exponents.csv"), EXPONENT_COLUMNS, exponent_rows))
    ctx.manifest.record(alpha={" ".join(f"{v:g}" for v in row["center"]): row["alpha"] for row in exponent_rows})


def cmd_validate(ctx: RunContext) -> None:
    report = validate_config(ctx.config)
    ctx.manifest.record(**{k: v for k, v in report.to_dict().items() if k != "violations"})
    ctx.manifest.add_output(write_json(ctx.output("validation.json"), report.to_dict()))
    if not report.passed:
        raise ConfigError(message("validation_failed"), violations=report.violations)


def cmd_minimize(ctx: RunContext) -> None:
    result, anchoring, epsilon = _solve(ctx)
    breakdown = discrete_breakdown(result, epsilon, ctx.elastic, ctx.potential, anchoring, ctx.config.deterministic)
    ctx.manifest.record(energy_total=breakdown.total, energy_elastic=breakdown.elastic, energy_potential=breakdown.potential)
    ctx.manifest.record(defects=_write_defects(ctx, result))
    _write_field(ctx, "field", result)


def cmd_sweep(ctx: RunContext) -> None:
    sweep = ctx.config.sweep_config()
    problem = ctx.config.problem(potential=ctx.potential)
    stages = epsilon_sweep(sweep, problem.field, ctx.config.minimize_config(), ctx.elastic, ctx.potential, problem.anchoring)
    rows = []
    for stage in stages:
        rows.append(
            {
                "stage": stage.stage,
                "epsilon": stage.epsilon,
                "energy_total": stage.energy.total,
                "energy_elastic": stage.energy.elastic,
                "energy_potential": stage.energy.potential,
                "max_dist": stage.max_dist,
                "h1_increment": stage.h1_increment,
                "iterations": len(stage.log.records) - 1,
                "converged": stage.log.converged,
            }
        )
        ctx.manifest.add_output(stage.log.write_csv(ctx.output(f"iterations_stage{stage.stage}.csv")))
        ctx.manifest.add_output(write_snapshot(ctx.output(f"stage{stage.stage}.snap"), stage.field))
    ctx.manifest.add_output(write_csv(ctx.output("sweep.csv"), SWEEP_COLUMNS, rows))
    final = stages[-1]
    if len(stages) >= 2:
        diag = ctx.config.diagnostics
        conv = convergence_report(stages, ctx.potential, ctx.config.exclusion_radius, diag[CONF_M_BOUND], diag.get(CONF_TAU))
        ctx.manifest.add_output(write_csv(ctx.output("convergence.csv"), CONVERGENCE_COLUMNS, [asdict(r) for r in conv.rows]))
        ctx.manifest.record(linf_decreasing=conv.linf_decreasing, h1_decreasing=conv.h1_decreasing, m_bound=conv.m_bound)
    ctx.manifest.record(defects=_write_defects(ctx, final.field), final_epsilon=final.epsilon)
    _write_field(ctx, "field", final.field)
    _decay(ctx, final.field, final.epsilon)


def cmd_decay(ctx: RunContext) -> None:
    fld, _, epsilon = _field_for_diagnostics(ctx)
    _decay(ctx, fld, epsilon)


def cmd_boundary_decay(ctx: RunContext) -> None:
    fld, anchoring, epsilon = _field_for_diagnostics(ctx)
    diag = ctx.config.diagnostics
    grid = fld.grid
    if (point := diag.get(CONF_BOUNDARY_POINT)) is None:
        mid = 0.5 * (np.asarray(grid.origin) + grid.upper)
        point = [mid[0], mid[1], grid.origin[2]]
    point = np.asarray(point, dtype=float)
    radii = diag[CONF_BOUNDARY_RADII] or ctx.config.radii(grid, np.array([point[0], point[1], grid.origin[2] + 0.5 * (grid.upper[2] - grid.origin[2])]))
    report = boundary_decay_profile(fld, epsilon, ctx.elastic, ctx.potential, point, radii, anchoring, diag[CONF_DELTA])
    rows = [{"point": report.center, **row} for row in report.rows()]
    ctx.manifest.add_output(write_csv(ctx.output("boundary_decay.csv"), BOUNDARY_DECAY_COLUMNS, rows))
    ctx.manifest.record(boundary_alpha=report.alpha, boundary_weak=anchoring is not None and anchoring.kind == ANCHORING_WEAK)


def cmd_extend(ctx: RunContext) -> None:
    conf = ctx.config.luckhaus
    u_func, v_func = perturbed_constant(ctx.potential, conf[CONF_PERTURBATION], conf[CONF_NORMAL_PERTURBATION])
    rows = scaling_study(
        conf[CONF_LEVELS],
        ctx.potential,
        u_func,
        v_func,
        conf[CONF_EPSILON_FACTOR],
        conf[CONF_DELTA1],
        conf[CONF_ETA],
        conf[CONF_SAMPLES],
        conf[CONF_LAYERS],
    )
    ctx.manifest.add_output(write_csv(ctx.output("scaling.csv"), SCALING_COLUMNS, [asdict(r) for r in rows]))
    meshes = {level: build_sphere_mesh(level, conf[CONF_SAMPLES]) for level in conf[CONF_LEVELS]}
    ctx.manifest.record(mesh_euler={level: mesh.euler_characteristic for level, mesh in meshes.items()})
    for name in ("c_phi", "c_w", "edge_potential_ratio", "c_extension_dirichlet", "c_extension_potential"):
        values = [getattr(r, name) for r in rows if getattr(r, name) is not None]
        if values:
            ctx.manifest.record(**{f"{name}_spread": max(values) / min(values) if min(values) > 0 else None})


def report_directory(out: Path) -> dict:
    """Summary of a finished run: its manifest constants and the row count of every table."""
    previous = read_manifest(out)
    tables = {}
    for name in sorted(previous.get("outputs", [])):
        path = out / name
        if path.suffix == ".csv" and path.exists():
            with path.open(newline="", encoding="utf-8") as src:
                tables[name] = max(sum(1 for _ in csv.reader(src)) - 1, 0)
    summary = {"command": previous.get("command"), "version": previous.get("version"), "constants": previous.get("constants", {}), "tables": tables}
    for key, value in sorted(summary["constants"].items()):
        _LOGGER.info(f"{key}: {value}")
    write_json(out / "report.json", summary)
    return summary


COMMANDS: dict[str, Callable[[RunContext], None]] = {
    COMMAND_VALIDATE: cmd_validate,
    COMMAND_MINIMIZE: cmd_minimize,
    COMMAND_SWEEP: cmd_sweep,
    COMMAND_DECAY: cmd_decay,
    COMMAND_BOUNDARY_DECAY: cmd_boundary_decay,
    COMMAND_EXTEND: cmd_extend,
}


def run(command: str, config: ExperimentConfig, field_path: Path | None = None) -> RunManifest:
    """Execute one pipeline and write its manifest next to the outputs."""
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(command, config.sha256, str(config.path) if config.path else None, config.seed, config.deterministic)
    potential = config.potential()
    ctx = RunContext(config, out, manifest, potential, config.elastic(potential), config.vtk, field_path)
    _LOGGER.info(f"Running {command} into {out}")
    if command != COMMAND_VALIDATE:
        ctx.record_model()
    try:
        COMMANDS[command](ctx)
    finally:
        manifest.write(out)
    return manifest


def setup_logging(verbose: bool = False) -> None:
    handler = logging.StreamHandler()
    handler.setFormatter(
        colorlog.ColoredFormatter(
            "%(log_color)s%(asctime)s %(levelname)-8s%(reset)s %(name)s: %(message)s",
            datefmt="%H:%M:%S",
            log_colors={"DEBUG": "cyan", "INFO": "green", "WARNING": "yellow", "ERROR": "red", "CRITICAL": "bold_red"},
        )
    )
    logger = logging.getLogger(DOMAIN)
    logger.handlers = [handler]
    logger.propagate = False
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)


def _point(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}") from err
    if len(values) != 3:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}")
    return values


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="experiment YAML file")
    common.add_argument("--out", help="output directory (overrides output.directory)")
    common.add_argument("--deterministic", action="store_true", help="fixed-order reductions for bit-identical tables")
    common.add_argument("--threads", type=int, help="worker threads for FFT convolutions")
    common.add_argument("--verbose", "-v", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(prog=DOMAIN, description=messages()["config"]["title"])
    parser.add_argument("--version", action="version", version=f"%(prog)s {package_version()}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser(COMMAND_VALIDATE, parents=[common], help="check the model assumptions of a configuration")
    for name, text in ((COMMAND_MINIMIZE, "minimize at one epsilon"), (COMMAND_SWEEP, "epsilon sweep with convergence and decay tables")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--epsilon", type=float, help="override solver.epsilon")
    for name, text in ((COMMAND_DECAY, "interior decay profiles"), (COMMAND_BOUNDARY_DECAY, "boundary decay profile on the bottom face")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--epsilon", type=float, help="override solver.epsilon")
        p.add_argument("--center", type=_point, help="x,y,z of the ball center (the face point for boundary-decay)")
        p.add_argument("--field", type=Path, help="snapshot to analyse instead of minimizing first")
    p = sub.add_parser(COMMAND_EXTEND, parents=[common], help="boundary modification and extension scaling study")
    p.add_argument("--levels", type=int, help="run dyadic levels 1..N")
    sub.add_parser(COMMAND_REPORT, parents=[common], help="summarize the manifest of an output directory")
    return parser


def _config_for(args: argparse.Namespace) -> ExperimentConfig:
    if args.config is None:
        raise ConfigError("--config is required", key="--config")
    config = load_config(args.config)
    center = getattr(args, "center", None)
    overrides = {
        "epsilon": getattr(args, "epsilon", None),
        "levels": getattr(args, "levels", None),
        "out": args.out,
        "deterministic": args.deterministic,
    }
    if center is not None:
        overrides["boundary_point" if args.command == COMMAND_BOUNDARY_DECAY else "center"] = center
    return config.with_overrides(**overrides)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    workers = fft.set_workers(args.threads) if args.threads else contextlib.nullcontext()
    try:
        with workers:
            if args.command == COMMAND_REPORT:
                out = Path(args.out) if args.out else load_config(args.config).output_dir if args.config else None
                if out is None or not (out / MANIFEST_NAME).exists():
                    raise ConfigError(f"No {MANIFEST_NAME} found", key="--out")
                report_directory(out)
            else:
                run(args.command, _config_for(args), field_path=getattr(args, "field", None))
    except ConfigError as err:
        _LOGGER.error(f"{err}")
        return EXIT_CONFIG
    except (SolverSetupError, SolverStagnationError, SweepStageError) as err:
        _LOGGER.error(f"Solver failed: {err}")
        return EXIT_SOLVER
    except AnisoPerturbError as err:
        _LOGGER.error(f"Diagnostics failed: {err}")
        return EXIT_DIAGNOSTICS
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
