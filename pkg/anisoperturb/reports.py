"""CSV tables, JSON summaries and the run manifest written next to every output."""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field
from functools import cache
import json
import logging
import math
from pathlib import Path
import platform
from typing import Any

import numpy as np

_LOGGER = logging.getLogger(__name__)

# frozen column sets per table
SWEEP_COLUMNS = ["stage", "epsilon", "energy_total", "energy_elastic", "energy_potential", "max_dist", "h1_increment", "iterations", "converged"]
DECAY_COLUMNS = ["center", "r", "renormalized_energy", "renormalized_dirichlet", "below_delta"]
BOUNDARY_DECAY_COLUMNS = ["point", "r", "renormalized_energy", "renormalized_dirichlet", "data_norm", "anchoring_quantity", "below_delta"]
EXPONENT_COLUMNS = ["center", "alpha", "holder_exponent", "fit_residual", "large_scale_ratio", "campanato", "holder_quotient", "diverging"]
CONVERGENCE_COLUMNS = ["stage", "epsilon", "h1_increment", "linf_to_final", "sup_norm", "within_m", "defects"]
SCALING_COLUMNS = [
    "level",
    "lam",
    "epsilon",
    "energy_u",
    "energy_phi",
    "dirichlet_w",
    "c_phi",
    "c_w",
    "edge_potential_ratio",
    "extension_energy",
    "extension_dirichlet",
    "c_extension_dirichlet",
    "c_extension_potential",
]

MANIFEST_NAME = "manifest.json"


def format_value(value: Any) -> str:
    """Locale-free, fixed-precision text for a table cell."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "nan" if math.isnan(value) else f"{float(value):.12e}"
    if isinstance(value, (list, tuple, np.ndarray)):
        return " ".join(format_value(v) for v in value)
    return str(value)


def write_csv(path: str | Path, columns: list[str], rows: list[dict[str, Any]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(row.get(c)) for c in columns])
    _LOGGER.info(f"Table written to {path} ({len(rows)} rows)")
    return path


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def write_json(path: str | Path, payload: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_jsonable) + "\n", encoding="utf-8")
    _LOGGER.info(f"Summary written to {path}")
    return path


@cache
def package_version() -> str:
    return json.loads((Path(__file__).parent / "manifest.json").read_text(encoding="utf-8"))["version"]


@dataclass
class RunManifest:
    """Provenance of one run: config hash, version, seed and every measured constant."""

    command: str
    config_sha256: str
    config_path: str | None = None
    seed: int = 0
    deterministic: bool = False
    version: str = field(default_factory=package_version)
    python: str = field(default_factory=platform.python_version)
    constants: dict[str, Any] = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)

    def record(self, **constants: Any) -> None:
        self.constants.update(constants)

    def add_output(self, path: Path) -> Path:
        self.outputs.append(Path(path).name)
        return path

    def write(self, directory: str | Path) -> Path:
        payload = asdict(self)
        payload["outputs"] = sorted(set(self.outputs))
        return write_json(Path(directory) / MANIFEST_NAME, payload)


def read_manifest(directory: str | Path) -> dict[str, Any]:
    return json.loads((Path(directory) / MANIFEST_NAME).read_text(encoding="utf-8"))
