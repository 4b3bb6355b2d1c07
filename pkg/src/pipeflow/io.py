"""File formats: ASCII mesh, legacy VTK fields, CSV reports, run manifest.

All floating-point output uses 17 significant digits so that files
round-trip losslessly and regression comparisons can be byte-exact.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .geometry import Mesh, TAG_CODES, TAG_NAMES


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


# -- mesh file --------------------------------------------------------------------

def write_mesh(path, mesh: Mesh) -> None:
    """ASCII mesh: counts line, vertices, labeled triangles, tagged edges."""
    lines = [f"{mesh.n_vertices} {mesh.n_triangles} {len(mesh.boundary_edges)}"]
    for x, y in mesh.vertices:
        lines.append(f"{_fmt(x)} {_fmt(y)}")
    for (i, j, k), label in zip(mesh.triangles, mesh.region_labels):
        lines.append(f"{i} {j} {k} {label}")
    for (i, j), tag in zip(mesh.boundary_edges, mesh.boundary_tags):
        lines.append(f"{i} {j} {TAG_NAMES[int(tag)]}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mesh(path) -> Mesh:
    with open(path, "r", encoding="ascii") as fh:
        tokens = fh.read().split("\n")
    rows = [t.split() for t in tokens if t.strip()]
    nv, nt, nb = (int(v) for v in rows[0])
    verts = np.array([[float(a), float(b)] for a, b in rows[1:1 + nv]])
    tri_rows = rows[1 + nv:1 + nv + nt]
    tris = np.array([[int(r[0]), int(r[1]), int(r[2])] for r in tri_rows], dtype=np.int32)
    labels = np.array([int(r[3]) for r in tri_rows], dtype=np.int32)
    edge_rows = rows[1 + nv + nt:1 + nv + nt + nb]
    edges = np.array([[int(r[0]), int(r[1])] for r in edge_rows], dtype=np.int32)
    tags = np.array([TAG_CODES[r[2]] for r in edge_rows], dtype=np.int32)
    return Mesh(verts, tris, edges, tags, labels)


# -- legacy VTK -------------------------------------------------------------------

def write_vtk(path, mesh: Mesh, velocity_vertices: np.ndarray, pressure: np.ndarray,
              title: str = "pipeflow fields") -> None:
    """Legacy ASCII unstructured grid with vertex velocity and pressure.

    Velocity is sampled at the mesh vertices (linear triangles, cell
    type 5); the quadratic mid-edge values are not part of this format.
    """
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {mesh.n_vertices} double",
    ]
    for x, y in mesh.vertices:
        lines.append(f"{_fmt(x)} {_fmt(y)} 0")
    lines.append(f"CELLS {mesh.n_triangles} {4 * mesh.n_triangles}")
    for i, j, k in mesh.triangles:
        lines.append(f"3 {i} {j} {k}")
    lines.append(f"CELL_TYPES {mesh.n_triangles}")
    lines.extend(["5"] * mesh.n_triangles)
    lines.append(f"POINT_DATA {mesh.n_vertices}")
    lines.append("VECTORS velocity double")
    for vx, vy in np.asarray(velocity_vertices).reshape(-1, 2)[:mesh.n_vertices]:
        lines.append(f"{_fmt(vx)} {_fmt(vy)} 0")
    lines.append("SCALARS pressure double")
    lines.append("LOOKUP_TABLE default")
    for p in np.asarray(pressure)[:mesh.n_vertices]:
        lines.append(_fmt(p))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


# -- CSV ----------------------------------------------------------------------------

def _csv_cell(value) -> str:
    if isinstance(value, str):
        if any(c in value for c in ",\"\n"):
            return '"' + value.replace('"', '""') + '"'
        return value
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return "NA"
    if isinstance(value, float) and np.isnan(value):
        return "NA"
    return _fmt(value)


def write_csv(path, header: list, rows: list) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_csv_cell(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\r\n".join(lines) + "\r\n")


def read_csv(path) -> tuple[list, list]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        content = fh.read()
    lines = [ln for ln in content.split("\r\n") if ln != ""]
    if not lines:
        lines = [ln for ln in content.splitlines() if ln]
    header = lines[0].split(",")
    return header, [ln.split(",") for ln in lines[1:]]


# -- manifest -------------------------------------------------------------------------

@dataclass
class RunManifest:
    command: str
    config_hash: str
    version: str
    mesh_stats: dict = field(default_factory=dict)
    solver_summary: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    files: list = field(default_factory=list)


def config_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def write_manifest(path, manifest: RunManifest) -> None:
    """Atomic JSON write; every emitted file appears by relative path."""
    payload = {
        "command": manifest.command,
        "config_hash": manifest.config_hash,
        "version": manifest.version,
        "mesh_stats": manifest.mesh_stats,
        "solver_summary": manifest.solver_summary,
        "diagnostics": manifest.diagnostics,
        "timings": manifest.timings,
        "files": manifest.files,
    }
    tmp = str(path) + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)
