"""The anisoperturb laboratory: anisotropic singular perturbation energies on grids."""

from __future__ import annotations

from .elastic import ElasticModel, check_positivity, elastic_operator_apply, ldg_density
from .field import Field, Grid, energy, gradient, h1_distance, linf_distance, renormalized_energy
from .manifold import Potential, biaxiality, bulk_f, dist_to_vacuum, geodesic, grad_f, project_to_vacuum, q_from_director, s_star
from .reports import package_version

__version__ = package_version()

__all__ = [
    "ElasticModel",
    "Field",
    "Grid",
    "Potential",
    "__version__",
    "biaxiality",
    "bulk_f",
    "check_positivity",
    "dist_to_vacuum",
    "elastic_operator_apply",
    "energy",
    "geodesic",
    "grad_f",
    "gradient",
    "h1_distance",
    "ldg_density",
    "linf_distance",
    "project_to_vacuum",
    "q_from_director",
    "renormalized_energy",
    "s_star",
]
