"""Shared fixtures: the two reference potentials, a seeded generator and the hedgehog field."""

from __future__ import annotations

import numpy as np
import pytest

from anisoperturb.const import DOMAIN_BALL
from anisoperturb.elastic import ElasticModel
from anisoperturb.field import Field, Grid
from anisoperturb.manifold import Potential
from anisoperturb.problems import hedgehog

SEED = 20240611


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(SEED)


@pytest.fixture(scope="session")
def ldg() -> Potential:
    return Potential.landau_de_gennes(1.0, 10.0, 1.0)


@pytest.fixture(scope="session")
def gl() -> Potential:
    return Potential.ginzburg_landau()


@pytest.fixture(scope="session")
def dirichlet_model() -> ElasticModel:
    return ElasticModel.isotropic(3)


@pytest.fixture(scope="session")
def hedgehog_field(gl: Potential) -> Field:
    """x/|x| on a 67^3 grid of spacing 1, ball of radius 32 about the singularity."""
    grid = Grid.centered(67, 1.0, DOMAIN_BALL, 32.0)
    return Field.from_function(grid, hedgehog(gl))
