import json

import numpy as np
import pytest

from pipeflow import config as cfgmod
from pipeflow import geometry, io
from pipeflow.errors import ConfigError

CASE = """\
# comment line
[domain]
kind = straight
inlet_length = 0.25
outlet_length = 0.75
half_height_in = 0.5

[mesh]
target_h = 0.2

[physics]
eta = 1.0
g_star = POISEUILLE(1.0)
sigma_star = 0   # inline comment

[solver]
linearization = picard_then_newton

[outputs]
directory = out
"""


class TestConfig:
    def test_parse_defaults(self):
        cfg = cfgmod.parse_case_text(CASE)
        assert cfg["domain"]["kind"] == "straight"
        assert cfg["solver"]["tol_rel"] == 1e-10
        assert cfg["physics"]["g_star"] == ("poiseuille", 1.0)
        assert cfg["outputs"]["write_vtk"] is True

    def test_roundtrip_identical_structure(self):
        cfg = cfgmod.parse_case_text(CASE)
        again = cfgmod.parse_case_text(cfgmod.serialize_case(cfg))
        assert again.sections == cfg.sections
        # serialization is a fixed point after one pass
        assert cfgmod.serialize_case(again) == cfgmod.serialize_case(cfg)

    def test_unknown_key_position(self):
        bad = CASE.replace("target_h = 0.2", "target_hh = 0.2")
        with pytest.raises(ConfigError) as err:
            cfgmod.parse_case_text(bad)
        assert err.value.line == 9 and err.value.col == 1

    def test_bad_value_position(self):
        bad = CASE.replace("eta = 1.0", "eta = fast")
        with pytest.raises(ConfigError) as err:
            cfgmod.parse_case_text(bad)
        assert err.value.line == 12 and err.value.col == 7

    def test_bad_expression_position(self):
        bad = CASE.replace("sigma_star = 0   # inline comment", "sigma_star = 2*z")
        with pytest.raises(ConfigError) as err:
            cfgmod.parse_case_text(bad)
        assert err.value.line == 14
        assert err.value.col == 16  # points at the unknown identifier

    def test_missing_required(self):
        with pytest.raises(ConfigError):
            cfgmod.parse_case_text(CASE.replace("eta = 1.0\n", ""))

    def test_key_outside_section(self):
        with pytest.raises(ConfigError):
            cfgmod.parse_case_text("a = 1\n" + CASE)

    def test_duplicate_key(self):
        with pytest.raises(ConfigError):
            cfgmod.parse_case_text(CASE + "\n[exact]\nvelocity = (0, 0)\nvelocity = (1, 1)\npressure = 0\n")

    def test_builders(self):
        cfg = cfgmod.parse_case_text(CASE)
        spec = cfgmod.make_domain(cfg)
        assert np.allclose(spec.nu_star, (1, 0))
        data = cfgmod.make_data(cfg, spec)
        assert data.eta == 1.0
        g = data.g_star(np.array([[0.0, 0.0]]))
        assert g[0, 0] == pytest.approx(1.5)  # 3*phi/(4 h^3) * h^2 at the centerline


class TestMeshIO:
    def test_roundtrip(self, tmp_path):
        spec = geometry.channel_spec(0.5, 0.7, 0.3, 0.4, middle_length=0.6, offset=0.2)
        mesh = geometry.generate_mesh(spec, 0.1)
        path = tmp_path / "mesh.txt"
        io.write_mesh(path, mesh)
        back = io.read_mesh(path)
        assert np.array_equal(back.vertices, mesh.vertices)  # 17 digits round-trip exactly
        assert np.array_equal(back.triangles, mesh.triangles)
        assert np.array_equal(back.boundary_edges, mesh.boundary_edges)
        assert np.array_equal(back.boundary_tags, mesh.boundary_tags)
        assert np.array_equal(back.region_labels, mesh.region_labels)

    def test_format_shape(self, tmp_path):
        spec = geometry.channel_spec(0.25, 0.75, 0.5)
        mesh = geometry.generate_mesh(spec, 0.25)
        path = tmp_path / "m.txt"
        io.write_mesh(path, mesh)
        lines = path.read_text().splitlines()
        nv, nt, nb = (int(x) for x in lines[0].split())
        assert nv == mesh.n_vertices and nt == mesh.n_triangles and nb == len(mesh.boundary_edges)
        assert len(lines) == 1 + nv + nt + nb
        assert lines[1 + nv + nt].split()[2] in ("I", "W", "O")


class TestVTK:
    def test_structure(self, tmp_path):
        spec = geometry.channel_spec(0.25, 0.75, 0.5)
        mesh = geometry.generate_mesh(spec, 0.25)
        vel = np.random.default_rng(0).standard_normal((mesh.n_vertices, 2))
        pres = np.random.default_rng(1).standard_normal(mesh.n_vertices)
        path = tmp_path / "f.vtk"
        io.write_vtk(path, mesh, vel, pres)
        text = path.read_text()
        assert "DATASET UNSTRUCTURED_GRID" in text
        assert f"POINTS {mesh.n_vertices} double" in text
        assert "VECTORS velocity double" in text
        assert "SCALARS pressure double" in text
        lines = text.splitlines()
        ct = lines.index(f"CELL_TYPES {mesh.n_triangles}")
        assert set(lines[ct + 1:ct + 1 + mesh.n_triangles]) == {"5"}

    def test_byte_determinism(self, tmp_path):
        spec = geometry.channel_spec(0.25, 0.75, 0.5)
        mesh = geometry.generate_mesh(spec, 0.25)
        vel = np.full((mesh.n_vertices, 2), 1.0 / 3.0)
        pres = np.full(mesh.n_vertices, 2.0 / 7.0)
        p1, p2 = tmp_path / "a.vtk", tmp_path / "b.vtk"
        io.write_vtk(p1, mesh, vel, pres)
        io.write_vtk(p2, mesh, vel, pres)
        assert p1.read_bytes() == p2.read_bytes()


class TestCSV:
    def test_roundtrip_17_digits(self, tmp_path):
        path = tmp_path / "t.csv"
        values = [1.0 / 3.0, np.pi, 1e-300, -2.5e17]
        io.write_csv(path, ["a", "b", "c", "d"], [values])
        header, rows = io.read_csv(path)
        assert header == ["a", "b", "c", "d"]
        assert [float(v) for v in rows[0]] == values

    def test_na_and_bool(self, tmp_path):
        path = tmp_path / "t.csv"
        io.write_csv(path, ["x", "ok"], [[None, True], [float("nan"), False]])
        _, rows = io.read_csv(path)
        assert rows[0] == ["NA", "true"] and rows[1] == ["NA", "false"]


class TestManifest:
    def test_atomic_write_and_fields(self, tmp_path):
        m = io.RunManifest(command="solve", config_hash=io.config_hash("x"), version="0.1.0",
                           files=["a.csv", "b.vtk"])
        path = tmp_path / "manifest.json"
        io.write_manifest(path, m)
        payload = json.loads(path.read_text())
        assert payload["files"] == ["a.csv", "b.vtk"]
        assert not (tmp_path / "manifest.json.tmp").exists()
