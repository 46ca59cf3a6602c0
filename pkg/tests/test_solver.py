from __future__ import annotations

import csv

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from anisoperturb.const import DOMAIN_BALL
from anisoperturb.diagnostics import detect_defects
from anisoperturb.elastic import ElasticModel
from anisoperturb.exceptions import InputDomainError, SolverStagnationError, SweepStageError
from anisoperturb.field import Field, Grid
from anisoperturb.manifold import rotation_action
from anisoperturb.problems import build_problem, hedgehog, uniform
from anisoperturb.solver import (
    LOG_COLUMNS,
    AnchoringSpec,
    Functional,
    MinimizeConfig,
    SweepConfig,
    el_residual,
    epsilon_sweep,
    minimize,
)


def _ball_hedgehog(gl, n: int = 17, h: float = 0.125):
    grid = Grid.centered(n, h, DOMAIN_BALL, 0.5 * (n - 1) * h)
    return build_problem(grid, gl, hedgehog(gl))


def test_configs_validate_parameters():
    with pytest.raises(InputDomainError):
        MinimizeConfig(0.0)
    with pytest.raises(InputDomainError):
        MinimizeConfig(0.1, shrink=1.0)
    with pytest.raises(InputDomainError):
        SweepConfig(1.0, ratio=1.5)
    assert SweepConfig(1.0, 0.5, 3).schedule == pytest.approx([1.0, 0.5, 0.25])


def test_anchoring_validation(gl):
    with pytest.raises(InputDomainError):
        AnchoringSpec("homeotropic")
    with pytest.raises(InputDomainError):
        AnchoringSpec.weak(-1.0, np.zeros((3, 3, 3, 3)))
    grid = Grid.centered(5, 0.5)
    field = Field.from_function(grid, lambda x: np.zeros(x.shape))
    with pytest.raises(InputDomainError):
        AnchoringSpec.dirichlet(np.zeros((5, 5, 5, 3))).check(field, gl)


def test_residual_vanishes_at_constant_vacuum_field(ldg):
    grid = Grid.centered(5, 0.5)
    field = Field.from_function(grid, uniform(ldg, (0.0, 1.0, 0.0)))
    res = el_residual(field, 0.3, ElasticModel.ldg(1.0, 0.5, 0.5), ldg, AnchoringSpec.free())
    assert np.max(np.abs(res.values)) <= 1e-10


def test_residual_is_zero_on_dirichlet_nodes(gl):
    problem = _ball_hedgehog(gl, 9, 0.25)
    res = el_residual(problem.field, 0.5, ElasticModel.isotropic(3), gl, problem.anchoring)
    assert np.all(res.values[problem.field.boundary_mask] == 0.0)


@pytest.mark.parametrize("weak", [False, True])
def test_residual_matches_energy_difference(rng, ldg, weak):
    grid = Grid.centered(9, 0.25)
    dirs = rng.normal(size=(*grid.shape, 3))
    data = ldg.vacuum_points(dirs / np.linalg.norm(dirs, axis=-1, keepdims=True))
    u = data + 0.2 * rng.normal(size=data.shape)
    v = rng.normal(size=data.shape)
    anchoring = AnchoringSpec.weak(3.0, data) if weak else AnchoringSpec.free()
    func = Functional(grid, 0.7, ElasticModel.ldg(1.0, 0.5, 0.5), ldg, anchoring)
    t = 1e-5
    fd = (func.parts(u + t * v).total(0.7) - func.parts(u - t * v).total(0.7)) / (2.0 * t)
    _, res = func.gradient(u)
    assert grid.node_volume * float(np.sum(res * v)) == pytest.approx(fd, rel=1e-6)


def test_energy_change_matches_parts(rng, gl):
    grid = Grid.centered(7, 0.25)
    u = rng.normal(size=(*grid.shape, 3))
    d = rng.normal(size=u.shape)
    anchoring = AnchoringSpec.weak(1.5, gl.project(rng.normal(size=u.shape)))
    func = Functional(grid, 0.4, ElasticModel.isotropic(3), gl, anchoring)
    el, _ = func.gradient(u)
    change = func.change(u, d, 0.01, el)
    direct = func.parts(u + 0.01 * d).total(0.4) - func.parts(u).total(0.4)
    assert change.total(0.4) == pytest.approx(direct, rel=1e-9)


def test_weak_anchoring_needs_box(gl):
    problem = _ball_hedgehog(gl, 9, 0.25)
    weak = AnchoringSpec.weak(1.0, problem.anchoring.values)
    with pytest.raises(InputDomainError):
        minimize(problem.field, MinimizeConfig(0.5, max_iters=5), ElasticModel.isotropic(3), gl, weak)


def test_epsilon_beyond_diameter(gl):
    problem = _ball_hedgehog(gl, 9, 0.25)
    with pytest.raises(InputDomainError):
        minimize(problem.field, MinimizeConfig(10.0), ElasticModel.isotropic(3), gl, problem.anchoring)


def test_minimize_hedgehog(gl):
    problem = _ball_hedgehog(gl)
    config = MinimizeConfig(0.25, max_iters=20_000, grad_tol=1e-3)
    result, log = minimize(problem.field, config, ElasticModel.isotropic(3), gl, problem.anchoring)
    energies = log.energies
    assert np.all(np.diff(energies) <= 1e-12 * abs(energies[0]))
    assert energies[-1] < energies[0]
    assert log.converged
    assert log.final_residual < 1e-3
    mask = problem.field.boundary_mask
    assert np.array_equal(result.values[mask], problem.field.values[mask])
    defects = detect_defects(result, gl)
    assert len(defects.components) == 1
    assert np.allclose(defects.components[0].center, 0.0, atol=0.125)


def test_armijo_constant_above_one_stagnates(gl):
    problem = _ball_hedgehog(gl, 9, 0.25)
    with pytest.raises(SolverStagnationError) as err:
        minimize(problem.field, MinimizeConfig(0.5, armijo=2.0), ElasticModel.isotropic(3), gl, problem.anchoring)
    assert err.value.iteration == 1


def test_iteration_log_csv(tmp_path, gl):
    problem = _ball_hedgehog(gl, 9, 0.25)
    _, log = minimize(problem.field, MinimizeConfig(0.5, max_iters=3), ElasticModel.isotropic(3), gl, problem.anchoring)
    with log.write_csv(tmp_path / "iterations.csv").open(newline="") as src:
        rows = list(csv.reader(src))
    assert rows[0] == LOG_COLUMNS
    assert len(rows) == len(log.records) + 1
    assert rows[1][0] == "0"


def test_epsilon_sweep(gl):
    problem = _ball_hedgehog(gl, 9, 0.25)
    base = MinimizeConfig(1.0, max_iters=500, grad_tol=1e-2)
    stages = epsilon_sweep(SweepConfig(0.5, 0.5, 2), problem.field, base, ElasticModel.isotropic(3), gl, problem.anchoring)
    assert [s.stage for s in stages] == [0, 1]
    assert [s.epsilon for s in stages] == pytest.approx([0.5, 0.25])
    assert stages[0].h1_increment is None
    assert stages[1].h1_increment >= 0.0
    assert stages[1].max_dist >= 0.0
    assert stages[1].energy.total == pytest.approx(stages[1].energy.elastic + stages[1].energy.potential / 0.25**2)


def test_sweep_stage_failure(gl):
    problem = _ball_hedgehog(gl, 9, 0.25)
    with pytest.raises(SweepStageError) as err:
        epsilon_sweep(SweepConfig(10.0, 0.5, 2), problem.field, MinimizeConfig(1.0), ElasticModel.isotropic(3), gl, problem.anchoring)
    assert err.value.stage == 0
    assert isinstance(err.value.cause, InputDomainError)


def test_descent_commutes_with_frame_rotations(ldg):
    elastic = ElasticModel.ldg(1.0, 0.0, 0.0)
    problem = build_problem(Grid.centered(9, 0.25, DOMAIN_BALL, 1.0), ldg, hedgehog(ldg))
    action = rotation_action(Rotation.from_rotvec([0.3, -0.5, 0.4]).as_matrix())
    config = MinimizeConfig(0.5, max_iters=30)
    result, log = minimize(problem.field, config, elastic, ldg, problem.anchoring)
    turned = problem.field.with_values(problem.field.values @ action.T)
    anchoring = AnchoringSpec.dirichlet(problem.anchoring.values @ action.T)
    turned_result, turned_log = minimize(turned, config, elastic, ldg, anchoring)
    assert np.allclose(turned_result.values, result.values @ action.T, atol=1e-8)
    assert turned_log.energies == pytest.approx(log.energies, rel=1e-10)


def test_deterministic_sums_match_plain_sums(rng, gl):
    grid = Grid.centered(7, 0.25)
    u = rng.normal(size=(*grid.shape, 3))
    plain = Functional(grid, 0.4, ElasticModel.isotropic(3), gl, AnchoringSpec.free()).parts(u)
    fixed = Functional(grid, 0.4, ElasticModel.isotropic(3), gl, AnchoringSpec.free(), deterministic=True).parts(u)
    assert fixed.elastic == pytest.approx(plain.elastic, rel=1e-12)
    assert fixed.potential == pytest.approx(plain.potential, rel=1e-12)


def test_deterministic_descent_is_repeatable(gl):
    problem = _ball_hedgehog(gl, 9, 0.25)
    config = MinimizeConfig(0.5, max_iters=20, deterministic=True)
    first, log = minimize(problem.field, config, ElasticModel.isotropic(3), gl, problem.anchoring)
    second, again = minimize(problem.field, config, ElasticModel.isotropic(3), gl, problem.anchoring)
    assert np.array_equal(first.values, second.values)
    assert [r.row() for r in log.records] == [r.row() for r in again.records]


def test_sweep_reports_the_minimized_energy(gl):
    problem = _ball_hedgehog(gl, 9, 0.25)
    base = MinimizeConfig(1.0, max_iters=200, grad_tol=1e-2)
    stages = epsilon_sweep(SweepConfig(0.5, 0.5, 2), problem.field, base, ElasticModel.isotropic(3), gl, problem.anchoring)
    for stage in stages:
        assert stage.energy.total == pytest.approx(stage.log.energies[-1], rel=1e-10)
