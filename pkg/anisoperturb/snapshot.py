"""Field snapshots: a self-describing binary layout and a legacy VTK exporter."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from .const import DIM, DOMAIN_BALL, DOMAIN_BOX, DOMAIN_HALF_BALL, POTENTIAL_LDG, SNAPSHOT_MAGIC, SNAPSHOT_VERSION
from .exceptions import InputDomainError
from .field import Field, Grid
from .manifold import Potential, biaxiality

_LOGGER = logging.getLogger(__name__)

_INT = np.dtype("<i8")
_FLOAT = np.dtype("<f8")
# domain kinds by their code in the trailing domain record
_DOMAINS = (DOMAIN_BOX, DOMAIN_BALL, DOMAIN_HALF_BALL)


def write_array(path: str | Path, values: np.ndarray, spacing: list[float], origin: list[float], trailer: bytes = b"") -> Path:
    """magic | version k ndim counts[ndim] (int64) | spacing[ndim] origin[ndim] (float64) | row-major float64 values | trailer.

    The last axis of values holds the k components.
    """
    path = Path(path)
    values = np.ascontiguousarray(values, dtype=_FLOAT)
    ndim = values.ndim - 1
    if len(spacing) != ndim or len(origin) != ndim:
        raise InputDomainError("geometry", (len(spacing), len(origin)), f"{ndim} spacings and origins")
    header = np.array([SNAPSHOT_VERSION, values.shape[-1], ndim, *values.shape[:-1]], dtype=_INT)
    with path.open("wb") as out:
        out.write(SNAPSHOT_MAGIC)
        out.write(header.tobytes())
        out.write(np.array(list(spacing) + list(origin), dtype=_FLOAT).tobytes())
        out.write(values.tobytes())
        out.write(trailer)
    _LOGGER.info(f"Snapshot written to {path}")
    return path


def read_array(path: str | Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(values, spacing, origin) of a snapshot file."""
    values, spacing, origin, _ = _read(path)
    return values, spacing, origin


def _read(path: str | Path) -> tuple[np.ndarray, np.ndarray, np.ndarray, bytes]:
    data = Path(path).read_bytes()
    offset = len(SNAPSHOT_MAGIC)
    if data[:offset] != SNAPSHOT_MAGIC:
        raise InputDomainError("snapshot", str(path), f"magic {SNAPSHOT_MAGIC!r}")
    version, k, ndim = (int(v) for v in np.frombuffer(data, dtype=_INT, count=3, offset=offset))
    if version != SNAPSHOT_VERSION:
        raise InputDomainError("snapshot version", version, f"== {SNAPSHOT_VERSION}")
    offset += 3 * _INT.itemsize
    shape = tuple(int(n) for n in np.frombuffer(data, dtype=_INT, count=ndim, offset=offset))
    offset += ndim * _INT.itemsize
    geometry = np.frombuffer(data, dtype=_FLOAT, count=2 * ndim, offset=offset)
    offset += 2 * ndim * _FLOAT.itemsize
    count = int(np.prod(shape)) * k
    values = np.frombuffer(data, dtype=_FLOAT, count=count, offset=offset).reshape(*shape, k)
    offset += count * _FLOAT.itemsize
    return values.copy(), geometry[:ndim].copy(), geometry[ndim:].copy(), data[offset:]


def write_snapshot(path: str | Path, field: Field) -> Path:
    """Field snapshot followed by the domain record: kind code (int64), center[3] and radius (float64)."""
    grid = field.grid
    center = grid.center if grid.center is not None else (0.0,) * DIM
    record = np.array([_DOMAINS.index(grid.kind)], dtype=_INT).tobytes()
    record += np.array([*center, grid.radius or 0.0], dtype=_FLOAT).tobytes()
    return write_array(path, field.values, [grid.h] * DIM, list(grid.origin), record)


def read_snapshot(path: str | Path) -> Field:
    values, spacing, origin, record = _read(path)
    if len(spacing) != DIM or not np.allclose(spacing, spacing[0]):
        raise InputDomainError("spacing", tuple(spacing), f"{DIM} equal spacings")
    kind, center, radius = DOMAIN_BOX, None, None
    # files without a domain record describe box grids
    if record:
        if len(record) != _INT.itemsize + (DIM + 1) * _FLOAT.itemsize:
            raise InputDomainError("domain record", len(record), "one kind code, a center and a radius")
        code = int(np.frombuffer(record, dtype=_INT, count=1)[0])
        if not 0 <= code < len(_DOMAINS):
            raise InputDomainError("domain kind", code, f"a code below {len(_DOMAINS)}")
        kind = _DOMAINS[code]
        geometry = np.frombuffer(record, dtype=_FLOAT, count=DIM + 1, offset=_INT.itemsize)
        if kind != DOMAIN_BOX:
            center, radius = tuple(float(c) for c in geometry[:DIM]), float(geometry[DIM])
    grid = Grid(values.shape[:DIM], float(spacing[0]), tuple(origin), kind, center, radius)
    return Field(grid, values, grid.boundary_mask())


def _scalar_block(name: str, values: np.ndarray) -> list[str]:
    # VTK point data runs x fastest
    flat = np.asarray(values, dtype=float).transpose(2, 1, 0).ravel()
    return [f"SCALARS {name} double 1", "LOOKUP_TABLE default", *(f"{v:.10g}" for v in flat)]


def write_vtk(path: str | Path, field: Field, potential: Potential | None = None, title: str = "anisoperturb field") -> Path:
    """Legacy ASCII STRUCTURED_POINTS file with one scalar per component plus dist_to_N and biaxiality."""
    path = Path(path)
    grid = field.grid
    nx, ny, nz = grid.shape
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {nx} {ny} {nz}",
        "ORIGIN {:g} {:g} {:g}".format(*grid.origin),
        f"SPACING {grid.h:g} {grid.h:g} {grid.h:g}",
        f"POINT_DATA {nx * ny * nz}",
    ]
    for alpha in range(field.k):
        lines += _scalar_block(f"u{alpha}", field.values[..., alpha])
    if potential is not None:
        lines += _scalar_block("dist_to_N", potential.dist(field.values))
        if potential.kind == POTENTIAL_LDG:
            lines += _scalar_block("biaxiality", np.nan_to_num(biaxiality(field.values), nan=1.0))
    path.write_text("\n".join(lines) + "\n")
    _LOGGER.info(f"VTK export written to {path}")
    return path
