from __future__ import annotations

import numpy as np
import pytest

from anisoperturb.elastic import (
    ElasticModel,
    check_positivity,
    discrete_energy,
    elastic_operator_apply,
    ldg_density,
    ldg_matrix,
    operator_values,
)
from anisoperturb.exceptions import InputDomainError
from anisoperturb.field import Field, Grid
from anisoperturb.manifold import S0_BASIS


def _affine(shape: tuple[int, int, int], h: float, G: np.ndarray, offset: np.ndarray) -> np.ndarray:
    x = np.stack(np.meshgrid(*[h * np.arange(n) for n in shape], indexing="ij"), axis=-1)
    return x @ G.T + offset


def _ldg_density_by_index(G: np.ndarray, L1: float, L2: float, L3: float) -> float:
    # T[i, k, j] = d_j Q_ik
    T = np.zeros((3, 3, 3))
    for a in range(5):
        for i in range(3):
            for k in range(3):
                for j in range(3):
                    T[i, k, j] += S0_BASIS[a, i, k] * G[a, j]
    total = 0.0
    for i in range(3):
        for j in range(3):
            for k in range(3):
                total += L1 * T[i, k, j] ** 2 + L2 * T[i, k, j] * T[i, j, k]
    div = [sum(T[i, j, j] for j in range(3)) for i in range(3)]
    return total + L3 * sum(v * v for v in div)


def test_ldg_matrix_matches_index_summation(rng):
    for _ in range(20):
        L = rng.uniform(-2.0, 2.0, size=3)
        G = rng.normal(size=(5, 3))
        form = G.ravel() @ ldg_matrix(*L) @ G.ravel()
        assert form == pytest.approx(_ldg_density_by_index(G, *L), rel=1e-12, abs=1e-12)
        assert ldg_density(G, *L) == pytest.approx(form, rel=1e-12, abs=1e-12)


def test_ldg_matrix_spectrum():
    # eigenvalues L1+L2 (x7), L1-L2/2 (x5) and L1+L2/6+5L3/3 (x3)
    w = np.linalg.eigvalsh(ldg_matrix(1.0, 0.5, 0.5))
    expected = sorted([0.75] * 5 + [1.5] * 7 + [1.0 + 0.5 / 6.0 + 2.5 / 3.0] * 3)
    assert w == pytest.approx(expected, abs=1e-12)


def test_positivity_reference_cases():
    assert check_positivity(1.0, 0.0, 0.0).positive
    report = check_positivity(1.0, 0.5, 0.5)
    assert report.positive and report.agrees
    assert report.margin == pytest.approx(1.5)
    assert report.min_eigenvalue == pytest.approx(0.75, abs=1e-12)
    for L in ((1.0, -2.0, 0.0), (1.0, 3.0, 0.0), (1.0, 0.0, -1.0)):
        report = check_positivity(*L)
        assert not report.positive
        assert report.agrees


def test_positivity_agrees_with_eigenvalues(rng):
    triples = rng.uniform(-2.0, 2.0, size=(1000, 3))
    assert all(check_positivity(*L).agrees for L in triples)


def test_ldg_model_rejects_nonpositive_constants():
    with pytest.raises(InputDomainError):
        ElasticModel.ldg(1.0, -2.0, 0.0)


def test_general_model_validation(rng):
    a = rng.normal(size=(9, 9))
    with pytest.raises(InputDomainError):
        ElasticModel.general(a)
    with pytest.raises(InputDomainError):
        ElasticModel.general(-np.eye(9))
    spd = a @ a.T + np.eye(9)
    model = ElasticModel.general(spd.reshape(3, 3, 3, 3))
    assert model.k == 3
    assert model.lambda_min == pytest.approx(float(np.linalg.eigvalsh(spd)[0]))


def test_density_respects_ellipticity(rng):
    model = ElasticModel.ldg(1.0, 0.5, 0.5)
    ell = model.ellipticity()
    G = rng.normal(size=(200, 5, 3))
    dens = model.density(G)
    norm2 = np.sum(G * G, axis=(-2, -1))
    assert np.all(dens >= ell.lambda_min * norm2 - 1e-12)
    assert np.all(dens <= ell.Lambda_max * norm2 + 1e-12)
    assert ell.condition == pytest.approx(ell.Lambda_max / ell.lambda_min)


def test_scaled_model():
    model = ElasticModel.isotropic(3).scaled(2.0)
    assert model.lambda_min == pytest.approx(2.0)
    with pytest.raises(InputDomainError):
        model.scaled(0.0)


def test_discrete_energy_exact_on_affine_fields(rng):
    model = ElasticModel.ldg(1.0, 0.5, 0.5)
    shape, h = (5, 6, 7), 0.3
    G = rng.normal(size=(5, 3))
    u = _affine(shape, h, G, rng.normal(size=5))
    volume = np.prod([(n - 1) * h for n in shape])
    assert discrete_energy(u, h, model) == pytest.approx(float(model.density(G)) * volume, rel=1e-12)


def test_operator_annihilates_affine_fields(rng):
    model = ElasticModel.ldg(1.0, 0.5, 0.5)
    u = _affine((6, 6, 6), 0.25, rng.normal(size=(5, 3)), rng.normal(size=5))
    out = operator_values(u, 0.25, model)
    assert np.max(np.abs(out[1:-1, 1:-1, 1:-1])) <= 1e-10


def test_isotropic_operator_is_negative_laplacian():
    h = 0.5
    x = np.stack(np.meshgrid(*[h * np.arange(7)] * 3, indexing="ij"), axis=-1)
    u = np.zeros((7, 7, 7, 3))
    u[..., 0] = x[..., 0] ** 2 + x[..., 1] ** 2
    out = operator_values(u, h, ElasticModel.isotropic(3))
    # W = |grad u|^2 gives -2 lap u = -8 for this component
    assert out[1:-1, 1:-1, 1:-1, 0] == pytest.approx(np.full((5, 5, 5), -8.0), abs=1e-10)
    assert np.max(np.abs(out[1:-1, 1:-1, 1:-1, 1:])) <= 1e-12


@pytest.mark.parametrize("weighted", [False, True])
def test_operator_is_energy_gradient(rng, weighted):
    shape, h = (5, 6, 7), 0.3
    model = ElasticModel.ldg(1.0, 0.5, 0.5)
    if weighted:
        x = np.stack(np.meshgrid(*[h * np.arange(n) for n in shape], indexing="ij"), axis=-1)
        model = model.with_weight(1.0 + 0.1 * np.sin(x[..., 0]) * np.cos(x[..., 2]), h)
    u = rng.normal(size=(*shape, 5))
    v = rng.normal(size=(*shape, 5))
    t = 1e-3
    # the energy is quadratic, so the central difference is exact up to rounding
    fd = (discrete_energy(u + t * v, h, model) - discrete_energy(u - t * v, h, model)) / (2.0 * t)
    assert h**3 * np.sum(operator_values(u, h, model) * v) == pytest.approx(fd, rel=1e-8)


def test_weight_validation():
    h = 0.25
    with pytest.raises(InputDomainError):
        ElasticModel.isotropic(3).with_weight(np.full((4, 4, 4), 2.0), h)
    with pytest.raises(InputDomainError):
        ElasticModel.isotropic(3).with_weight(np.ones((4, 4)), h)
    model = ElasticModel.isotropic(3).with_weight(np.ones((4, 4, 4)), h)
    u = np.random.default_rng(1).normal(size=(4, 4, 4, 3))
    assert discrete_energy(u, h, model) == pytest.approx(discrete_energy(u, h, ElasticModel.isotropic(3)), rel=1e-12)


def test_operator_shape_checks():
    with pytest.raises(InputDomainError):
        operator_values(np.zeros((4, 4, 4, 5)), 0.1, ElasticModel.isotropic(3))
    with pytest.raises(InputDomainError):
        discrete_energy(np.zeros((2, 4, 4, 3)), 0.1, ElasticModel.isotropic(3))


def test_elastic_operator_apply_keeps_grid():
    grid = Grid((4, 4, 4), 0.5)
    field = Field(grid, np.ones((4, 4, 4, 3)), grid.boundary_mask())
    out = elastic_operator_apply(field, ElasticModel.isotropic(3))
    assert out.grid == grid
    assert np.allclose(out.values, 0.0)
