from __future__ import annotations

import numpy as np
import pytest

from anisoperturb.exceptions import InputDomainError, PreconditionError, SmallnessViolationError
from anisoperturb.luckhaus import build_sphere_mesh, luckhaus_interpolant, modify_boundary, scaling_study
from anisoperturb.problems import perturbed_constant

LEVELS = [2, 3, 4]


def _spread(values: list[float]) -> float:
    return max(values) / min(values)


@pytest.mark.parametrize(("level", "counts"), [(1, (26, 48, 24)), (2, (98, 192, 96))])
def test_mesh_cell_counts(level, counts):
    mesh = build_sphere_mesh(level, 4)
    assert (len(mesh.vertices), len(mesh.edges), len(mesh.faces)) == counts
    assert mesh.euler_characteristic == 2
    assert mesh.blocks_per_side == 2**level
    assert mesh.lam == 2.0**-level


def test_mesh_samples_lie_on_the_sphere():
    mesh = build_sphere_mesh(2, 6)
    assert np.allclose(np.linalg.norm(mesh.points, axis=-1), 1.0)
    assert mesh.points.shape == (96, 6, 6, 3)


def test_mesh_area_and_distortion():
    mesh = build_sphere_mesh(2, 8)
    assert np.sum(mesh.face_areas()) == pytest.approx(4.0 * np.pi, rel=1e-2)
    low, high = mesh.area_distortion()
    assert 0.0 < low <= high
    assert high / low <= 3.0


def test_mesh_validation():
    with pytest.raises(InputDomainError):
        build_sphere_mesh(0)
    with pytest.raises(InputDomainError):
        build_sphere_mesh(2, 5)


def test_tangential_dirichlet_of_coordinate_function():
    # |grad_T x|^2 = 1 - x^2 integrates to 8 pi / 3 over the sphere
    mesh = build_sphere_mesh(3, 8)
    values = mesh.sample(lambda x: x[..., :1])
    assert mesh.integrate(mesh.tangential_dirichlet(values)) == pytest.approx(8.0 * np.pi / 3.0, rel=2e-2)


def test_modify_boundary_of_constant_data(gl):
    mesh = build_sphere_mesh(2, 6)
    u = mesh.sample(lambda x: np.broadcast_to([0.0, 0.0, 1.0], x.shape).copy())
    result = modify_boundary(mesh, u, mesh.lam, gl)
    assert result.precondition_ok
    assert np.allclose(result.w, u)
    assert result.energy_phi == pytest.approx(0.0, abs=1e-20)
    assert result.c_phi is None
    assert np.allclose(result.phi.outer(), u)
    assert np.allclose(result.phi.inner(), result.w)


def test_modify_boundary_outputs(gl):
    mesh = build_sphere_mesh(2, 6)
    u_func, _ = perturbed_constant(gl, 1e-3)
    u = mesh.sample(u_func)
    result = modify_boundary(mesh, u, mesh.lam, gl)
    assert np.max(gl.dist(result.w)) <= 1e-8
    assert np.array_equal(result.phi.outer(), u)
    assert result.phi.values.shape == (96, 6, 6, 5, 3)
    assert result.c_phi is not None and result.c_phi > 0.0


def test_modify_boundary_preconditions(gl):
    mesh = build_sphere_mesh(2, 6)
    u = mesh.sample(lambda x: x)
    with pytest.raises(PreconditionError):
        modify_boundary(mesh, u, 2.0 * mesh.lam, gl)
    with pytest.raises(InputDomainError):
        modify_boundary(mesh, u, mesh.lam, gl, layers=4)


def test_modify_boundary_smallness_violation(gl):
    mesh = build_sphere_mesh(1, 6)
    u = mesh.sample(lambda x: 0.01 * x)
    with pytest.raises(SmallnessViolationError) as err:
        modify_boundary(mesh, u, mesh.lam, gl)
    assert err.value.face == 0


@pytest.mark.parametrize("name", ["gl", "ldg"])
def test_interpolant_inner_half_on_vacuum(request, name):
    pot = request.getfixturevalue(name)
    mesh = build_sphere_mesh(2, 6)
    u_func, v_func = perturbed_constant(pot, 1e-4)
    u, v = mesh.sample(u_func), mesh.sample(v_func)
    result = luckhaus_interpolant(mesh, u, v, mesh.lam, pot, layers=5)
    inner = result.phi.values[:, :, :, :3]
    assert np.max(pot.f(inner)) <= 1e-12
    assert np.array_equal(result.phi.outer(), u)
    assert np.allclose(result.phi.inner(), v)
    assert result.c_dirichlet > 0.0


def test_interpolant_preconditions(gl):
    mesh = build_sphere_mesh(2, 6)
    u_func, v_func = perturbed_constant(gl, 0.5)
    with pytest.raises(PreconditionError):
        luckhaus_interpolant(mesh, mesh.sample(u_func), mesh.sample(v_func), mesh.lam, gl)
    u_func, _ = perturbed_constant(gl, 1e-4)
    with pytest.raises(InputDomainError):
        luckhaus_interpolant(mesh, mesh.sample(u_func), 2.0 * mesh.sample(u_func), mesh.lam, gl)


def test_scaling_study_constants_are_uniform(gl):
    u_func, v_func = perturbed_constant(gl, 1e-4)
    rows = scaling_study(LEVELS, gl, u_func, v_func, epsilon_factor=1.0)
    assert [row.level for row in rows] == LEVELS
    assert [row.lam for row in rows] == pytest.approx([0.25, 0.125, 0.0625])
    assert [row.epsilon for row in rows] == pytest.approx([0.25, 0.125, 0.0625])
    assert _spread([row.c_phi for row in rows]) <= 2.0
    assert _spread([row.c_extension_dirichlet for row in rows]) <= 2.0
    # E(u) on the sphere does not depend on the level
    assert _spread([row.energy_u for row in rows]) <= 1.1


def test_scaling_study_without_extension(ldg):
    u_func, _ = perturbed_constant(ldg, 1e-4)
    rows = scaling_study([2], ldg, u_func, epsilon_factor=0.5)
    assert rows[0].epsilon == pytest.approx(0.125)
    assert rows[0].c_extension_dirichlet is None


def test_interpolant_energy_uses_epsilon(gl):
    mesh = build_sphere_mesh(2, 6)
    u_func, v_func = perturbed_constant(gl, 1e-4, normal=1e-6)
    u, v = mesh.sample(u_func), mesh.sample(v_func)
    coarse = luckhaus_interpolant(mesh, u, v, mesh.lam, gl)
    fine = luckhaus_interpolant(mesh, u, v, 0.5 * mesh.lam, gl)
    assert coarse.potential_phi > 0.0
    assert coarse.energy_phi == pytest.approx(coarse.dirichlet_phi + coarse.potential_phi / mesh.lam**2, rel=1e-12)
    assert fine.energy_phi - coarse.energy_phi == pytest.approx(3.0 * coarse.potential_phi / mesh.lam**2, rel=1e-9)
    with pytest.raises(InputDomainError):
        luckhaus_interpolant(mesh, u, v, 0.0, gl)


def test_perturbed_constant_normal_part(gl):
    u_func, _ = perturbed_constant(gl, 0.0, normal=1e-3)
    x = np.array([[0.0, 0.0, 1.0], [0.6, 0.8, 0.0]])
    assert np.allclose(u_func(x), [[0.0, 0.0, 1.001], [0.0, 0.0, 1.0]])


def test_edge_potential_ratio_is_bounded_across_levels(gl):
    u_func, v_func = perturbed_constant(gl, 1e-4, normal=1e-6)
    rows = scaling_study(LEVELS, gl, u_func, v_func)
    ratios = [row.edge_potential_ratio for row in rows]
    assert all(ratio is not None for ratio in ratios)
    # f decreases along the edge segments towards N
    assert max(ratios) <= 1.0 + 1e-3
    assert all(row.extension_energy > row.extension_dirichlet for row in rows)


def test_edge_potential_ratio_needs_resolvable_data(gl):
    # purely tangential data of this size leaves f(u) at roundoff
    u_func, _ = perturbed_constant(gl, 1e-4)
    rows = scaling_study([2], gl, u_func)
    assert rows[0].edge_potential_ratio is None


def test_measured_constants_spread_with_normal_data(gl):
    u_func, v_func = perturbed_constant(gl, 1e-4, normal=1e-6)
    rows = scaling_study(LEVELS, gl, u_func, v_func)
    assert _spread([row.c_w for row in rows]) <= 2.0
    assert _spread([row.c_extension_potential for row in rows]) <= 2.0
    assert _spread([row.c_phi for row in rows]) <= 2.0
