"""Admissible 2D channel domains and their structured triangulations.

A domain is a straight inlet rectangle and a straight outlet rectangle
(each carried by a rigid transform to local coordinates) joined by two
C1 wall curves.  The boundary is tagged INLET / WALL / OUTLET and every
triangle carries a region label so that downstream constructions can
integrate over the inlet section, the outlet section and the first third
of the outlet section separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, MeshError

# Boundary tags.
INLET, WALL, OUTLET = 0, 1, 2
TAG_NAMES = {INLET: "I", WALL: "W", OUTLET: "O"}
TAG_CODES = {v: k for k, v in TAG_NAMES.items()}

# Per-triangle region labels.  OMEGA_SHARP marks the first third of the
# outlet section (local axial coordinate below one third of its length).
OMEGA0, OMEGA1, OMEGA2, OMEGA_SHARP = 0, 1, 2, 3

_ORTHO_TOL = 1e-12
_TANGENCY_TOL = 1e-8


@dataclass(frozen=True)
class RigidTransform:
    """Orientation-preserving isometry ``x -> translation + rotation @ x``.

    ``apply`` maps global coordinates to the local frame of a straight
    section; ``inverse`` goes back.
    """

    translation: np.ndarray
    rotation: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.translation, dtype=float).reshape(2)
        r = np.asarray(self.rotation, dtype=float).reshape(2, 2)
        if not np.allclose(r.T @ r, np.eye(2), atol=_ORTHO_TOL):
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(r) - 1.0) > _ORTHO_TOL:
            raise ValueError("rotation must have determinant +1")
        t.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "translation", t)
        object.__setattr__(self, "rotation", r)

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform(np.zeros(2), np.eye(2))

    @staticmethod
    def from_angle(theta: float, translation=(0.0, 0.0)) -> "RigidTransform":
        c, s = math.cos(theta), math.sin(theta)
        return RigidTransform(np.asarray(translation, dtype=float), np.array([[c, -s], [s, c]]))

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        return self.translation + x @ self.rotation.T

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        return (y - self.translation) @ self.rotation

    def direction_to_global(self, d):
        """Global direction corresponding to a local direction ``d``."""
        return np.asarray(d, dtype=float) @ self.rotation


def rigid_apply(t: RigidTransform, x):
    return t.apply(x)


def rigid_inverse(t: RigidTransform, y):
    return t.inverse(y)


class HermiteCurve:
    """Piecewise cubic Hermite curve, uniformly parametrized on [0, 1].

    Tangents are derivatives with respect to the global parameter, so a
    two-point curve with tangents equal to the chord is exactly straight.
    """

    def __init__(self, points, tangents):
        self.points = np.asarray(points, dtype=float)
        self.tangents = np.asarray(tangents, dtype=float)
        if self.points.shape != self.tangents.shape or self.points.ndim != 2 or len(self.points) < 2:
            raise ValueError("need matching (n,2) points and tangents with n >= 2")
        self.points.setflags(write=False)
        self.tangents.setflags(write=False)

    @staticmethod
    def line(p0, p1) -> "HermiteCurve":
        p0 = np.asarray(p0, dtype=float)
        p1 = np.asarray(p1, dtype=float)
        chord = p1 - p0
        return HermiteCurve([p0, p1], [chord, chord])

    def _segment(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        nseg = len(self.points) - 1
        idx = np.clip((t * nseg).astype(int), 0, nseg - 1)
        s = t * nseg - idx
        return idx, s, nseg

    def point(self, t):
        idx, s, nseg = self._segment(t)
        dt = 1.0 / nseg
        p0, p1 = self.points[idx], self.points[idx + 1]
        m0, m1 = self.tangents[idx] * dt, self.tangents[idx + 1] * dt
        s = s[:, None]
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        out = h00 * p0 + h10 * m0 + h01 * p1 + h11 * m1
        return out[0] if np.isscalar(t) or np.ndim(t) == 0 else out

    def tangent(self, t):
        idx, s, nseg = self._segment(t)
        dt = 1.0 / nseg
        p0, p1 = self.points[idx], self.points[idx + 1]
        m0, m1 = self.tangents[idx] * dt, self.tangents[idx + 1] * dt
        s = s[:, None]
        d00 = 6 * s**2 - 6 * s
        d10 = 3 * s**2 - 4 * s + 1
        d01 = -6 * s**2 + 6 * s
        d11 = 3 * s**2 - 2 * s
        out = (d00 * p0 + d10 * m0 + d01 * p1 + d11 * m1) / dt
        return out[0] if np.isscalar(t) or np.ndim(t) == 0 else out

    def arc_length(self, n_gauss: int = 64) -> float:
        t, w = np.polynomial.legendre.leggauss(n_gauss)
        t = 0.5 * (t + 1.0)
        speed = np.linalg.norm(self.tangent(t), axis=1)
        return 0.5 * float(w @ speed)


@dataclass(frozen=True)
class Section:
    """Straight rectangular section (0, length) x (-half_height, half_height)."""

    length: float
    half_height: float
    transform: RigidTransform

    def __post_init__(self):
        if self.length <= 0 or self.half_height <= 0:
            raise ValueError("section length and half-height must be positive")


@dataclass(frozen=True)
class DomainSpec:
    """Admissible channel: inlet and outlet sections joined by two wall curves.

    The inlet boundary sits at local x = 0 of the inlet section; the outlet
    boundary at local x = length of the outlet section.  ``wall_bottom`` runs
    from the inner bottom corner of the inlet to the inner bottom corner of
    the outlet (``wall_top`` likewise); both may be None when the sections
    abut directly (equal half-heights, aligned frames).
    """

    inlet: Section
    outlet: Section
    wall_bottom: HermiteCurve | None = None
    wall_top: HermiteCurve | None = None

    @property
    def inlet_inner_corners(self):
        t1, s1 = self.inlet.transform, self.inlet
        return t1.inverse((s1.length, -s1.half_height)), t1.inverse((s1.length, s1.half_height))

    @property
    def outlet_inner_corners(self):
        t2, s2 = self.outlet.transform, self.outlet
        return t2.inverse((0.0, -s2.half_height)), t2.inverse((0.0, s2.half_height))

    @property
    def nu_star(self):
        """Constant outward unit normal on the outlet boundary."""
        return self.outlet.transform.direction_to_global((1.0, 0.0))

    @property
    def inlet_normal(self):
        return -self.inlet.transform.direction_to_global((1.0, 0.0))


def _angle_between(u, v) -> float:
    u = u / np.linalg.norm(u)
    v = v / np.linalg.norm(v)
    return abs(math.atan2(u[0] * v[1] - u[1] * v[0], float(u @ v)))


def _segments_intersect(p, q, r, s):
    """Vectorized proper-intersection test for segment batches p-q and r-s."""

    def orient(a, b, c):
        return (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])

    d1 = orient(p, q, r)
    d2 = orient(p, q, s)
    d3 = orient(r, s, p)
    d4 = orient(r, s, q)
    return (d1 * d2 < 0) & (d3 * d4 < 0)


def _boundary_polyline(spec: DomainSpec, n_wall: int) -> np.ndarray:
    """Closed ccw sample of the boundary polygon (without repeating the seam)."""
    t1, s1 = spec.inlet.transform, spec.inlet
    t2, s2 = spec.outlet.transform, spec.outlet
    ts = np.linspace(0.0, 1.0, n_wall)
    pts = [t1.inverse((0.0, -s1.half_height)), t1.inverse((s1.length, -s1.half_height))]
    if spec.wall_bottom is not None:
        pts.extend(spec.wall_bottom.point(ts[1:]))
    pts.append(t2.inverse((s2.length, -s2.half_height)))
    pts.append(t2.inverse((s2.length, s2.half_height)))
    pts.append(t2.inverse((0.0, s2.half_height)))
    if spec.wall_top is not None:
        pts.extend(spec.wall_top.point(ts[::-1][1:]))
    pts.append(t1.inverse((0.0, s1.half_height)))
    return np.asarray(pts)


def build_domain(spec: DomainSpec, n_check: int = 200) -> DomainSpec:
    """Validate an admissible channel description.

    Checks corner continuity, junction tangency against the section axes,
    and that the sampled boundary is a simple closed curve.  Raises
    ``GeometryError`` on violation; returns the domain unchanged otherwise.
    """
    ib, it = spec.inlet_inner_corners
    ob, ot = spec.outlet_inner_corners
    walls = (spec.wall_bottom, spec.wall_top)
    if (walls[0] is None) != (walls[1] is None):
        raise GeometryError("wall curves must be given for both sides or neither")
    if walls[0] is None:
        if np.linalg.norm(ib - ob) > 1e-12 or np.linalg.norm(it - ot) > 1e-12:
            raise GeometryError("abutting sections require matching junction corners")
    else:
        axis_in = spec.inlet.transform.direction_to_global((1.0, 0.0))
        axis_out = spec.outlet.transform.direction_to_global((1.0, 0.0))
        for curve, start, end in ((walls[0], ib, ob), (walls[1], it, ot)):
            if np.linalg.norm(curve.point(0.0) - start) > 1e-9 or np.linalg.norm(curve.point(1.0) - end) > 1e-9:
                raise GeometryError("wall curve endpoints do not meet the section corners")
            for t, axis in ((0.0, axis_in), (1.0, axis_out)):
                tan = curve.tangent(t)
                if _angle_between(tan, axis) > _TANGENCY_TOL or float(tan @ axis) <= 0.0:
                    raise GeometryError(f"wall curve not tangent to the section axis at t={t}")

    poly = _boundary_polyline(spec, n_check)
    n = len(poly)
    a = poly
    b = np.roll(poly, -1, axis=0)
    ii, jj = np.triu_indices(n, k=2)
    keep = ~((ii == 0) & (jj == n - 1))  # first and last segment are adjacent
    ii, jj = ii[keep], jj[keep]
    if np.any(_segments_intersect(a[ii], b[ii], a[jj], b[jj])):
        raise GeometryError("boundary polygon self-intersects")
    return spec


def channel_spec(inlet_length, outlet_length, h_in, h_out=None, middle_length=0.0, offset=0.0) -> DomainSpec:
    """Axis-aligned channel factory: straight pipes, expansions and S-bends.

    The inlet occupies global x in (0, inlet_length); the outlet starts at
    x = inlet_length + middle_length with its axis shifted vertically by
    ``offset``.  Hermite walls with horizontal end tangents join the two.
    """
    h_out = h_in if h_out is None else h_out
    t_in = RigidTransform.identity()
    x2 = inlet_length + middle_length
    t_out = RigidTransform(np.array([-x2, -offset]), np.eye(2))
    if middle_length == 0.0:
        if h_in != h_out or offset != 0.0:
            raise GeometryError("abutting sections need equal half-heights and zero offset")
        wb = wt = None
    else:
        tan = np.array([middle_length, 0.0])
        wb = HermiteCurve([(inlet_length, -h_in), (x2, offset - h_out)], [tan, tan])
        wt = HermiteCurve([(inlet_length, h_in), (x2, offset + h_out)], [tan, tan])
    return build_domain(DomainSpec(Section(inlet_length, h_in, t_in), Section(outlet_length, h_out, t_out), wb, wt))


@dataclass(frozen=True)
class Mesh:
    """Conforming triangulation with tagged boundary and region labels."""

    vertices: np.ndarray       # (nv, 2)
    triangles: np.ndarray      # (nt, 3) ccw
    boundary_edges: np.ndarray  # (nb, 2) ccw-oriented vertex pairs
    boundary_tags: np.ndarray   # (nb,)
    region_labels: np.ndarray   # (nt,)

    def __post_init__(self):
        for name in ("vertices", "triangles", "boundary_edges", "boundary_tags", "region_labels"):
            arr = np.ascontiguousarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def triangle_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        return 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                      - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))

    def boundary_length(self, tag: int) -> float:
        e = self.boundary_edges[self.boundary_tags == tag]
        d = self.vertices[e[:, 1]] - self.vertices[e[:, 0]]
        return float(np.linalg.norm(d, axis=1).sum())

    def boundary_polygon_area(self) -> float:
        """Shoelace area over the directed boundary edges."""
        a = self.vertices[self.boundary_edges[:, 0]]
        b = self.vertices[self.boundary_edges[:, 1]]
        return 0.5 * float(np.sum(a[:, 0] * b[:, 1] - b[:, 0] * a[:, 1]))

    def min_angle(self) -> float:
        p = self.vertices[self.triangles]
        angles = []
        for k in range(3):
            u = p[:, (k + 1) % 3] - p[:, k]
            v = p[:, (k + 2) % 3] - p[:, k]
            cosa = np.sum(u * v, axis=1) / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
            angles.append(np.degrees(np.arccos(np.clip(cosa, -1.0, 1.0))))
        return float(np.min(angles))

    def max_edge_length(self) -> float:
        p = self.vertices[self.triangles]
        lengths = [np.linalg.norm(p[:, (k + 1) % 3] - p[:, k], axis=1) for k in range(3)]
        return float(np.max(lengths))


def _piece_table(spec: DomainSpec):
    """Per-piece (length, bottom(f), top(f)) mappers along the channel axis."""
    t1, s1 = spec.inlet.transform, spec.inlet
    t2, s2 = spec.outlet.transform, spec.outlet

    def rect_mapper(t, length, h):
        def bottom(f):
            return t.inverse(np.column_stack([f * length, np.full_like(f, -h)]))

        def top(f):
            return t.inverse(np.column_stack([f * length, np.full_like(f, h)]))

        return bottom, top

    pieces = []
    b, tp = rect_mapper(t1, s1.length, s1.half_height)
    pieces.append((s1.length, b, tp, [0.0, 1.0]))
    if spec.wall_bottom is not None:
        arc = 0.5 * (spec.wall_bottom.arc_length() + spec.wall_top.arc_length())
        pieces.append((arc, spec.wall_bottom.point, spec.wall_top.point, [0.0, 1.0]))
    b, tp = rect_mapper(t2, s2.length, s2.half_height)
    # Snap a station at one third of the outlet section (internal interface).
    pieces.append((s2.length, b, tp, [0.0, 1.0 / 3.0, 1.0]))
    return pieces


def generate_mesh(spec: DomainSpec, target_h: float, max_smooth_passes: int = 10) -> Mesh:
    """Structured transfinite triangulation of an admissible channel.

    Grid lines are snapped to the section junctions and to the one-third
    station of the outlet section.  Quads are split into triangles with a
    checkerboard diagonal pattern (symmetric under vertical mirroring).
    """
    if target_h <= 0 or target_h >= min(spec.inlet.half_height, spec.outlet.half_height):
        raise ValueError("target_h must be positive and below the section half-heights")
    pieces = _piece_table(spec)

    columns = []   # (bottom_pt, top_pt) per grid column
    station_cols = set()
    first = True
    col = 0
    for length, bottom, top, breaks in pieces:
        if not first:
            col -= 1  # piece shares its first column with the previous one
        fr = []
        for k in range(len(breaks) - 1):
            span = breaks[k + 1] - breaks[k]
            n = max(1, math.ceil(span * length / target_h))
            fr.extend(breaks[k] + span * np.arange(0, n) / n)
        fr.append(1.0)
        fr = np.asarray(fr)
        bot, tp = bottom(fr), top(fr)
        for k in range(len(fr)):
            if first or k > 0:
                columns.append((bot[k], tp[k]))
        for brk in breaks:
            station_cols.add(col + int(np.argmin(np.abs(fr - brk))))
        col += len(fr) - (0 if first else 1)
        first = False

    ns = len(columns) - 1
    width = 2.0 * max(spec.inlet.half_height, spec.outlet.half_height)
    nt_rows = max(1, math.ceil(width / target_h))
    if nt_rows % 2:
        nt_rows += 1  # even row count keeps the diagonal pattern mirror-symmetric
    tgrid = np.linspace(0.0, 1.0, nt_rows + 1)

    verts = np.empty(((ns + 1) * (nt_rows + 1), 2))
    for i, (b, t) in enumerate(columns):
        verts[i * (nt_rows + 1):(i + 1) * (nt_rows + 1)] = b[None, :] * (1 - tgrid[:, None]) + t[None, :] * tgrid[:, None]

    def vid(i, j):
        return i * (nt_rows + 1) + j

    tris = []
    for i in range(ns):
        for j in range(nt_rows):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v11, v01 = vid(i + 1, j + 1), vid(i, j + 1)
            if (i + j) % 2 == 0:
                tris.append((v00, v10, v11))
                tris.append((v00, v11, v01))
            else:
                tris.append((v00, v10, v01))
                tris.append((v10, v11, v01))
    tris = np.asarray(tris, dtype=np.int32)

    bedges, btags = [], []
    for j in range(nt_rows):  # inlet, traversed downward (interior on the left)
        bedges.append((vid(0, j + 1), vid(0, j)))
        btags.append(INLET)
    for j in range(nt_rows):  # outlet, traversed upward
        bedges.append((vid(ns, j), vid(ns, j + 1)))
        btags.append(OUTLET)
    for i in range(ns):  # bottom wall rightward, top wall leftward
        bedges.append((vid(i, 0), vid(i + 1, 0)))
        btags.append(WALL)
        bedges.append((vid(i + 1, nt_rows), vid(i, nt_rows)))
        btags.append(WALL)

    labels = _classify_regions(spec, verts, tris)
    mesh = Mesh(verts, tris, np.asarray(bedges, dtype=np.int32), np.asarray(btags, dtype=np.int32), labels)
    if np.any(mesh.triangle_areas() <= 0):
        raise MeshError("transfinite map produced inverted triangles")

    for _ in range(max_smooth_passes):
        if mesh.min_angle() > 15.0:
            break
        verts = _laplacian_smooth(mesh, station_cols, nt_rows, ns)
        mesh = Mesh(verts, tris, mesh.boundary_edges, mesh.boundary_tags, labels)
    if mesh.min_angle() <= 15.0:
        raise MeshError(f"min angle {mesh.min_angle():.2f} deg below the 15 deg floor")
    return mesh


def _classify_regions(spec: DomainSpec, verts, tris) -> np.ndarray:
    centroids = verts[tris].mean(axis=1)
    c1 = spec.inlet.transform.apply(centroids)
    c2 = spec.outlet.transform.apply(centroids)
    s1, s2 = spec.inlet, spec.outlet
    labels = np.full(len(tris), OMEGA0, dtype=np.int32)
    in1 = (c1[:, 0] > 0) & (c1[:, 0] < s1.length) & (np.abs(c1[:, 1]) < s1.half_height)
    in2 = (c2[:, 0] > 0) & (c2[:, 0] < s2.length) & (np.abs(c2[:, 1]) < s2.half_height)
    labels[in1] = OMEGA1
    labels[in2 & (c2[:, 0] >= s2.length / 3.0)] = OMEGA2
    labels[in2 & (c2[:, 0] < s2.length / 3.0)] = OMEGA_SHARP
    return labels


def _laplacian_smooth(mesh: Mesh, station_cols, nt_rows, ns):
    """One smoothing pass over interior vertices off the station columns."""
    verts = np.array(mesh.vertices)
    neighbors = {}
    for t in mesh.triangles:
        for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            neighbors.setdefault(a, set()).add(b)
            neighbors.setdefault(b, set()).add(a)
    fixed = set(np.unique(mesh.boundary_edges))
    for i in station_cols:
        for j in range(nt_rows + 1):
            fixed.add(i * (nt_rows + 1) + j)
    new = verts.copy()
    for v, nbrs in neighbors.items():
        if v not in fixed:
            new[v] = verts[list(nbrs)].mean(axis=0)
    return new


def interface_edges(mesh: Mesh, regions_a, regions_b) -> np.ndarray:
    """Internal edges separating two sets of region labels."""
    regions_a, regions_b = set(regions_a), set(regions_b)
    edge_owner = {}
    out = []
    for t_idx, tri in enumerate(mesh.triangles):
        lab = int(mesh.region_labels[t_idx])
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            key = (min(a, b), max(a, b))
            if key in edge_owner:
                other = edge_owner[key]
                if (other in regions_a and lab in regions_b) or (other in regions_b and lab in regions_a):
                    out.append(key)
            else:
                edge_owner[key] = lab
    return np.asarray(sorted(out), dtype=np.int32).reshape(-1, 2)


def disk_mesh(n_rings: int, radius: float = 1.0) -> Mesh:
    """Hexagonal-pattern triangulation of a disk (all-WALL boundary).

    Ring k carries 6k vertices; quality stays well above the 15 degree
    floor for any ring count.  Used for torsion cross-sections.
    """
    if n_rings < 1:
        raise ValueError("need at least one ring")
    verts = [(0.0, 0.0)]
    ring_start = [0, 1]
    for k in range(1, n_rings + 1):
        r = radius * k / n_rings
        m = 6 * k
        ang = 2.0 * np.pi * np.arange(m) / m
        verts.extend(np.column_stack([r * np.cos(ang), r * np.sin(ang)]))
        ring_start.append(ring_start[-1] + m)
    verts = np.asarray(verts)

    tris = []
    for k in range(6):  # innermost fan
        tris.append((0, 1 + k, 1 + (k + 1) % 6))
    for k in range(1, n_rings):
        inner, m_in = ring_start[k], 6 * k
        outer, m_out = ring_start[k + 1], 6 * (k + 1)
        i = j = 0
        ang_in = 2.0 * np.pi * np.arange(m_in + 1) / m_in
        ang_out = 2.0 * np.pi * np.arange(m_out + 1) / m_out
        while i < m_in or j < m_out:
            vi, vo = inner + i % m_in, outer + j % m_out
            if j < m_out and (i == m_in or ang_out[j + 1] <= ang_in[i + 1] + 1e-12):
                tris.append((vi, vo, outer + (j + 1) % m_out))
                j += 1
            else:
                tris.append((vi, outer + j % m_out, inner + (i + 1) % m_in))
                i += 1
    tris = np.asarray(tris, dtype=np.int32)

    m_out = 6 * n_rings
    outer = ring_start[n_rings]
    bedges = np.column_stack([outer + np.arange(m_out), outer + (np.arange(m_out) + 1) % m_out]).astype(np.int32)
    btags = np.full(m_out, WALL, dtype=np.int32)
    labels = np.full(len(tris), OMEGA0, dtype=np.int32)
    mesh = Mesh(verts, tris, bedges, btags, labels)
    assert np.all(mesh.triangle_areas() > 0)
    return mesh


def square_mesh(n: int, lo: float = -1.0, hi: float = 1.0) -> Mesh:
    """Uniform n x n checkerboard triangulation of the square (lo, hi)^2."""
    grid = np.linspace(lo, hi, n + 1)
    xx, yy = np.meshgrid(grid, grid, indexing="ij")
    verts = np.column_stack([xx.ravel(), yy.ravel()])

    def vid(i, j):
        return i * (n + 1) + j

    tris, bedges = [], []
    for i in range(n):
        for j in range(n):
            v00, v10, v11, v01 = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            if (i + j) % 2 == 0:
                tris.extend([(v00, v10, v11), (v00, v11, v01)])
            else:
                tris.extend([(v00, v10, v01), (v10, v11, v01)])
    for i in range(n):
        bedges.append((vid(i, 0), vid(i + 1, 0)))
        bedges.append((vid(i + 1, n), vid(i, n)))
        bedges.append((vid(n, i), vid(n, i + 1)))
        bedges.append((vid(0, i + 1), vid(0, i)))
    tris = np.asarray(tris, dtype=np.int32)
    bedges = np.asarray(bedges, dtype=np.int32)
    btags = np.full(len(bedges), WALL, dtype=np.int32)
    return Mesh(verts, tris, bedges, btags, np.full(len(tris), OMEGA0, dtype=np.int32))
