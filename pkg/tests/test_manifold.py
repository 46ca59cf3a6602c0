from __future__ import annotations

import numpy as np
import pytest

from anisoperturb.const import DEFAULT_GROWTH_RADII
from anisoperturb.exceptions import DegenerateManifoldError, InputDomainError, NonuniqueGeodesicError, ProjectionUndefinedError
from anisoperturb.manifold import (
    GrowthParams,
    Potential,
    biaxiality,
    bulk_f,
    check_growth_conditions,
    dist_to_vacuum,
    fibonacci_sphere,
    from_matrix,
    geodesic,
    grad_f,
    project_to_vacuum,
    q_from_director,
    rotation_action,
    s_star,
    to_matrix,
    tube_constants,
    uniaxial_oracle,
    uniaxial_profile,
)


def _unit_vectors(rng: np.random.Generator, count: int) -> np.ndarray:
    n = rng.normal(size=(count, 3))
    return n / np.linalg.norm(n, axis=-1, keepdims=True)


def _rotation(rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    return q if np.linalg.det(q) > 0 else -q


def _central_difference(pot: Potential, z: np.ndarray, step: float = 1e-5) -> np.ndarray:
    out = np.zeros_like(z)
    for a in range(z.shape[-1]):
        e = np.zeros(z.shape[-1])
        e[a] = step
        out[..., a] = (pot.f(z + e) - pot.f(z - e)) / (2.0 * step)
    return out


def test_matrix_coordinates_are_symmetric_and_traceless(rng):
    q = to_matrix(rng.normal(size=(20, 5)))
    assert np.allclose(q, np.swapaxes(q, -1, -2), atol=1e-12)
    assert np.allclose(np.trace(q, axis1=-2, axis2=-1), 0.0, atol=1e-12)


def test_coordinates_are_frobenius_isometric(rng):
    z = rng.normal(size=(20, 5))
    assert np.allclose(np.sum(to_matrix(z) ** 2, axis=(-2, -1)), np.sum(z * z, axis=-1), rtol=1e-12)
    assert np.allclose(from_matrix(to_matrix(z)), z, atol=1e-12)


def test_q_from_director_norm(rng, ldg):
    z = q_from_director(_unit_vectors(rng, 50), ldg.s_star)
    assert np.allclose(np.sum(z * z, axis=-1), 2.0 * ldg.s_star**2 / 3.0, rtol=1e-12)
    assert ldg.vacuum_radius == pytest.approx(np.sqrt(2.0 / 3.0) * ldg.s_star)


def test_q_from_director_eigenvalues():
    w = np.linalg.eigvalsh(to_matrix(q_from_director(np.array([0.0, 0.0, 1.0]), 3.0)))
    assert w == pytest.approx([-1.0, -1.0, 2.0], abs=1e-12)


def test_q_from_director_rejects_non_unit():
    with pytest.raises(InputDomainError):
        q_from_director(np.array([0.0, 0.0, 1.1]), 1.0)


def test_s_star_reference_value():
    assert s_star(1.0, 10.0, 1.0) == pytest.approx(3.53802, abs=1e-5)


def test_s_star_matches_oracle():
    assert s_star(1.0, 8.0, 1.0) == pytest.approx(uniaxial_oracle(1.0, 8.0, 1.0), rel=1e-10)


def test_s_star_matches_oracle_on_admissible_triples(rng):
    for _ in range(100):
        a2, c2 = rng.uniform(0.1, 2.0, size=2)
        b2 = np.sqrt(30.0 * a2 * c2) * rng.uniform(1.0, 3.0)
        assert s_star(a2, b2, c2) == pytest.approx(uniaxial_oracle(a2, b2, c2), rel=1e-10)


def test_s_star_minimizes_uniaxial_profile(ldg):
    s = ldg.s_star
    values = uniaxial_profile(np.array([0.9 * s, s, 1.1 * s]), 1.0, 10.0, 1.0)
    assert values[1] < values[0] and values[1] < values[2]
    assert values[1] < 0.0


def test_s_star_degenerate():
    with pytest.raises(DegenerateManifoldError):
        s_star(1.0, 1.0, 1.0)
    with pytest.raises(InputDomainError):
        s_star(-1.0, 10.0, 1.0)


def test_potential_rejects_metastable_vacuum():
    # 192 a c < 9 b^2 <= 216 a c: a nonzero critical point exists but is not the global minimum
    with pytest.raises(DegenerateManifoldError):
        Potential.landau_de_gennes(1.0, 4.8, 1.0)


def test_f_vanishes_on_vacuum(ldg, gl):
    dirs = fibonacci_sphere(200)
    assert np.max(ldg.f(ldg.vacuum_points(dirs))) <= 1e-10
    assert np.max(gl.f(gl.vacuum_points(dirs))) <= 1e-10


def test_f_at_origin_is_normalization(ldg):
    expected = -uniaxial_profile(ldg.s_star, 1.0, 10.0, 1.0)
    assert ldg.f(np.zeros(5)) == pytest.approx(expected, rel=1e-12)
    assert ldg.normalization_constant == pytest.approx(expected, rel=1e-12)


def test_f_nonnegative(rng, ldg):
    assert np.min(ldg.f(3.0 * rng.normal(size=(1000, 5)))) >= 0.0


def test_f_rotation_invariant(rng, ldg):
    z = rng.normal(size=(50, 5))
    action = rotation_action(_rotation(rng))
    assert np.allclose(action @ action.T, np.eye(5), atol=1e-12)
    assert np.allclose(ldg.f(z @ action.T), ldg.f(z), rtol=1e-10, atol=1e-10)


@pytest.mark.parametrize("name", ["ldg", "gl"])
def test_grad_matches_central_difference(request, rng, name):
    pot = request.getfixturevalue(name)
    dirs = rng.normal(size=(100, pot.k))
    z = dirs / np.linalg.norm(dirs, axis=-1, keepdims=True) * rng.uniform(0.0, 3.0, size=(100, 1))
    g = pot.grad(z)
    fd = _central_difference(pot, z)
    err = np.linalg.norm(fd - g, axis=-1)
    assert np.all(err <= 1e-6 * np.maximum(np.linalg.norm(g, axis=-1), 1.0))


def test_grad_vanishes_on_vacuum(ldg, rng):
    assert np.max(np.abs(ldg.grad(ldg.vacuum_points(_unit_vectors(rng, 50))))) <= 1e-8


@pytest.mark.parametrize("name", ["ldg", "gl"])
def test_difference_matches_direct_evaluation(request, rng, name):
    pot = request.getfixturevalue(name)
    z = 2.0 * rng.normal(size=(100, pot.k))
    dz = 0.3 * rng.normal(size=(100, pot.k))
    assert np.allclose(pot.difference(z, dz), pot.f(z + dz) - pot.f(z), rtol=1e-9, atol=1e-9)


def test_project_is_identity_on_vacuum(rng, ldg):
    z = ldg.vacuum_points(_unit_vectors(rng, 50))
    assert np.allclose(ldg.project(z), z, atol=1e-10)


def test_project_is_idempotent(rng, ldg, gl):
    for pot in (ldg, gl):
        p = pot.project(rng.normal(size=(50, pot.k)))
        assert np.allclose(pot.project(p), p, atol=1e-10)
        assert pot.on_manifold(p)


def test_project_matches_director_grid(ldg):
    z = from_matrix(np.diag([0.5, 0.1, -0.6]))
    candidates = q_from_director(fibonacci_sphere(10_000), ldg.s_star)
    brute = float(np.min(np.linalg.norm(candidates - z, axis=-1)))
    exact = float(ldg.dist(z))
    assert exact <= brute + 1e-12
    assert brute - exact <= 0.1
    assert np.allclose(ldg.project(z), q_from_director(np.array([1.0, 0.0, 0.0]), ldg.s_star), atol=1e-10)


def test_project_undefined(ldg, gl):
    with pytest.raises(ProjectionUndefinedError):
        gl.project(np.zeros(3))
    # negative uniaxial order: the two leading eigenvalues coincide
    with pytest.raises(ProjectionUndefinedError):
        ldg.project(q_from_director(np.array([0.0, 0.0, 1.0]), -1.0))


def test_dist_defined_where_projection_is_not(gl):
    assert float(gl.dist(np.zeros(3))) == pytest.approx(1.0, abs=1e-12)


def test_geodesic_sphere_midpoint(gl):
    mid = gl.geodesic(0.5, np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0]))
    assert mid == pytest.approx(np.array([1.0, 1.0, 0.0]) / np.sqrt(2.0), abs=1e-12)


def test_geodesic_ldg_endpoints_and_vacuum(ldg):
    n1 = np.array([0.0, 0.0, 1.0])
    n2 = np.array([np.sin(1.0), 0.0, np.cos(1.0)])
    z1, z2 = ldg.vacuum_points(n1), ldg.vacuum_points(n2)
    assert np.allclose(ldg.geodesic(0.0, z1, z2), z1, atol=1e-10)
    assert np.allclose(ldg.geodesic(1.0, z1, z2), z2, atol=1e-10)
    path = ldg.geodesic(np.linspace(0.0, 1.0, 11), z1, z2)
    assert np.max(ldg.dist(path)) <= 1e-10
    # n and -n label the same point, so the path is unchanged
    assert np.allclose(ldg.geodesic(0.5, z1, ldg.vacuum_points(-n2)), path[5], atol=1e-10)


def test_geodesic_not_unique(ldg, gl):
    with pytest.raises(NonuniqueGeodesicError):
        gl.geodesic(0.5, np.array([0.0, 0.0, 1.0]), np.array([0.0, 0.0, -1.0]))
    with pytest.raises(NonuniqueGeodesicError):
        ldg.geodesic(0.5, ldg.vacuum_points(np.array([0.0, 0.0, 1.0])), ldg.vacuum_points(np.array([1.0, 0.0, 0.0])))


def test_geodesic_endpoints_off_vacuum(gl):
    with pytest.raises(InputDomainError):
        gl.geodesic(0.5, np.array([0.0, 0.0, 2.0]), np.array([0.0, 1.0, 0.0]))


def test_biaxiality(rng, ldg):
    uniaxial = ldg.vacuum_points(_unit_vectors(rng, 10))
    assert np.allclose(biaxiality(uniaxial), 0.0, atol=1e-10)
    assert biaxiality(from_matrix(np.diag([1.0, -1.0, 0.0]))) == pytest.approx(1.0, abs=1e-12)
    assert np.isnan(biaxiality(np.zeros(5)))


@pytest.mark.parametrize("name", ["ldg", "gl"])
def test_growth_conditions_hold(request, name):
    pot = request.getfixturevalue(name)
    report = check_growth_conditions(pot, GrowthParams(2.0, 0.75), [r * pot.s_star for r in DEFAULT_GROWTH_RADII])
    assert report.passed
    assert len(report.radii) == len(DEFAULT_GROWTH_RADII)


def test_growth_params_domain():
    with pytest.raises(InputDomainError):
        GrowthParams(1.4, 0.75)
    with pytest.raises(InputDomainError):
        GrowthParams(2.0, 0.4)
    assert GrowthParams(3.0, 0.5).A_exp == pytest.approx(1.0)


def test_growth_needs_two_shells(gl):
    with pytest.raises(InputDomainError):
        check_growth_conditions(gl, GrowthParams(2.0, 0.75), [1.0, 4.0])


@pytest.mark.parametrize("name", ["ldg", "gl"])
def test_tube_constants(request, name):
    report = tube_constants(request.getfixturevalue(name), samples=2000, seed=3)
    assert report.passed
    assert report.samples > 0


def test_module_functions_delegate(rng, ldg):
    z = rng.normal(size=(4, 5))
    assert np.array_equal(bulk_f(z, ldg), ldg.f(z))
    assert np.array_equal(grad_f(z, ldg), ldg.grad(z))
    assert np.array_equal(project_to_vacuum(z, ldg), ldg.project(z))
    assert np.array_equal(dist_to_vacuum(z, ldg), ldg.dist(z))
    a, b = ldg.vacuum_points(np.array([[1.0, 0.0, 0.0], [0.6, 0.8, 0.0]]))
    assert np.allclose(geodesic(0.5, a, b, ldg), ldg.geodesic(0.5, a, b))
