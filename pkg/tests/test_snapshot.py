from __future__ import annotations

import numpy as np
import pytest

from anisoperturb.const import DOMAIN_BALL, DOMAIN_BOX, DOMAIN_HALF_BALL, SNAPSHOT_MAGIC
from anisoperturb.exceptions import InputDomainError
from anisoperturb.field import Field, Grid
from anisoperturb.luckhaus import AnnulusField, build_sphere_mesh
from anisoperturb.problems import hedgehog
from anisoperturb.snapshot import read_array, read_snapshot, write_array, write_snapshot, write_vtk


def test_snapshot_preserves_field(tmp_path, rng):
    grid = Grid((4, 5, 6), 0.125, (-0.25, 0.5, 1.0))
    field = Field(grid, rng.normal(size=(4, 5, 6, 5)), grid.boundary_mask())
    path = write_snapshot(tmp_path / "field.snap", field)
    assert path.read_bytes()[: len(SNAPSHOT_MAGIC)] == SNAPSHOT_MAGIC
    loaded = read_snapshot(path)
    assert loaded.grid.shape == grid.shape
    assert loaded.grid.h == grid.h
    assert loaded.grid.origin == grid.origin
    assert np.array_equal(loaded.values, field.values)
    assert np.array_equal(loaded.boundary_mask, grid.face_mask())


def test_snapshot_rejects_foreign_files(tmp_path):
    path = tmp_path / "bad.snap"
    path.write_bytes(b"NOTASNAP" + bytes(64))
    with pytest.raises(InputDomainError):
        read_array(path)


def test_snapshot_rejects_unequal_spacing(tmp_path):
    path = write_array(tmp_path / "aniso.snap", np.zeros((3, 3, 3, 1)), [1.0, 1.0, 2.0], [0.0, 0.0, 0.0])
    with pytest.raises(InputDomainError):
        read_snapshot(path)


@pytest.mark.parametrize("kind", [DOMAIN_BALL, DOMAIN_HALF_BALL])
def test_snapshot_preserves_ball_domains(tmp_path, gl, kind):
    grid = Grid.centered(9, 0.25, kind, 1.0)
    field = Field.from_function(grid, hedgehog(gl))
    loaded = read_snapshot(write_snapshot(tmp_path / "ball.snap", field))
    assert loaded.grid == grid
    assert np.array_equal(loaded.boundary_mask, grid.boundary_mask())
    assert np.array_equal(loaded.grid.quadrature_weights(), grid.quadrature_weights())


def test_snapshot_without_domain_record_is_a_box(tmp_path):
    path = write_array(tmp_path / "plain.snap", np.zeros((3, 3, 3, 1)), [0.5] * 3, [0.0, 0.0, 0.0])
    assert read_snapshot(path).grid.kind == DOMAIN_BOX


def test_snapshot_rejects_truncated_domain_record(tmp_path):
    path = write_array(tmp_path / "cut.snap", np.zeros((3, 3, 3, 1)), [0.5] * 3, [0.0, 0.0, 0.0], b"\x01")
    with pytest.raises(InputDomainError):
        read_snapshot(path)


def test_write_array_checks_geometry(tmp_path):
    with pytest.raises(InputDomainError):
        write_array(tmp_path / "x.snap", np.zeros((3, 3, 1)), [1.0], [0.0, 0.0])


def test_mesh_and_annulus_snapshots(tmp_path, gl):
    mesh = build_sphere_mesh(1, 4)
    values = mesh.sample(lambda x: x)
    _, spacing, origin = read_array(mesh.save_field(tmp_path / "trace.snap", values))
    assert spacing == pytest.approx([1.0, 2.0 / 3.0, 2.0 / 3.0])
    assert origin == pytest.approx([0.0, -1.0, -1.0])
    annulus = AnnulusField(mesh, np.repeat(values[:, :, :, None], 3, axis=3))
    loaded, spacing, _ = read_array(annulus.save(tmp_path / "annulus.snap"))
    assert loaded.shape == (24, 4, 4, 3, 3)
    assert spacing[-1] == pytest.approx(1.0)


def test_vtk_export(tmp_path, ldg):
    grid = Grid.centered(5, 0.5)
    field = Field.from_function(grid, hedgehog(ldg))
    text = write_vtk(tmp_path / "field.vtk", field, ldg).read_text()
    lines = text.splitlines()
    assert lines[0] == "# vtk DataFile Version 3.0"
    assert "DIMENSIONS 5 5 5" in lines
    assert "POINT_DATA 125" in lines
    assert "SCALARS u4 double 1" in lines
    assert "SCALARS dist_to_N double 1" in lines
    assert "SCALARS biaxiality double 1" in lines
    assert len(lines) == 8 + 7 * (2 + 125)
