"""Taylor-Hood space (quadratic velocity, linear pressure) on a triangulation.

Velocity nodes are the mesh vertices plus one node per edge; each node
carries two velocity components interleaved as dof = 2*node + component.
Pressure unknowns live at the vertices.  Inlet-corner nodes shared between
the inlet and a wall resolve to the wall (homogeneous) constraint.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .. import geometry
from . import quadrature as quad


class FESpace:
    def __init__(self, mesh: geometry.Mesh, domain: geometry.DomainSpec | None = None):
        self.mesh = mesh
        self.domain = domain
        tri = mesh.triangles
        nv = mesh.n_vertices

        pairs = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]], axis=0)
        pairs_sorted = np.sort(pairs, axis=1)
        edges, inverse = np.unique(pairs_sorted, axis=0, return_inverse=True)
        self.edges = edges
        self.n_edges = len(edges)
        tri_edges = inverse.reshape(3, -1).T  # local edge order (0,1), (1,2), (2,0)
        self.elem_nodes = np.concatenate([tri, nv + tri_edges], axis=1).astype(np.int64)

        self.n_vertices = nv
        self.n_nodes = nv + self.n_edges
        self.n_vdofs = 2 * self.n_nodes
        self.n_pdofs = nv
        self.node_coords = np.concatenate([mesh.vertices, 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])])

        p = mesh.vertices[tri]
        jac = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)  # columns are edge vectors
        det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
        if np.any(det <= 0):
            raise ValueError("mesh has non-ccw triangles")
        inv = np.empty_like(jac)
        inv[:, 0, 0] = jac[:, 1, 1]
        inv[:, 0, 1] = -jac[:, 0, 1]
        inv[:, 1, 0] = -jac[:, 1, 0]
        inv[:, 1, 1] = jac[:, 0, 0]
        inv /= det[:, None, None]
        self.detj = det
        gref = quad.p2_gradients(quad.TRI_POINTS)  # (nq, 6, 2)
        self.gphys = np.ascontiguousarray(np.einsum("qid,tde->tqie", gref, inv, optimize=True))
        self.wdet = np.ascontiguousarray(quad.TRI_WEIGHTS[None, :] * det[:, None])
        self.p2 = np.ascontiguousarray(quad.p2_values(quad.TRI_POINTS))
        self.p1 = np.ascontiguousarray(quad.p1_values(quad.TRI_POINTS))
        self.quad_points = np.ascontiguousarray(np.einsum("qk,tkd->tqd", quad.TRI_BARY, p, optimize=True))

        self._build_boundary()
        self._build_constraints()

    # -- boundary -----------------------------------------------------------

    def _build_boundary(self):
        mesh = self.mesh
        nv = self.n_vertices
        directed = {}
        for t, tri in enumerate(mesh.triangles):
            for k, (a, b) in enumerate(((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0]))):
                directed[(int(a), int(b))] = (t, k)

        edge_lookup = {(int(a), int(b)): i for i, (a, b) in enumerate(self.edges)}
        n_b = len(mesh.boundary_edges)
        self.bedge_vertices = np.empty((n_b, 2), dtype=np.int64)
        self.bedge_nodes = np.empty((n_b, 3), dtype=np.int64)
        self.bedge_normal = np.empty((n_b, 2))
        self.bedge_length = np.empty(n_b)
        self.bedge_owner = np.empty((n_b, 2), dtype=np.int64)  # (triangle, local edge)
        self.bedge_tags = np.asarray(mesh.boundary_tags, dtype=np.int64)
        for i, (a, b) in enumerate(np.asarray(mesh.boundary_edges, dtype=np.int64)):
            if (int(a), int(b)) not in directed:
                if (int(b), int(a)) not in directed:
                    raise ValueError("boundary edge does not belong to any triangle")
                a, b = b, a  # canonicalize to ccw (interior on the left)
            self.bedge_vertices[i] = (a, b)
            self.bedge_owner[i] = directed[(int(a), int(b))]
            mid = nv + edge_lookup[(int(min(a, b)), int(max(a, b)))]
            self.bedge_nodes[i] = (a, b, mid)
            d = mesh.vertices[b] - mesh.vertices[a]
            lng = float(np.hypot(d[0], d[1]))
            self.bedge_length[i] = lng
            self.bedge_normal[i] = (d[1] / lng, -d[0] / lng)

        self.edge_p2 = quad.edge_p2_values(quad.EDGE_POINTS)     # (nqe, 3)
        self.edge_p2_deriv = quad.edge_p2_derivs(quad.EDGE_POINTS)
        self.edge_w = quad.EDGE_WEIGHTS

    def boundary_nodes(self, tag: int) -> np.ndarray:
        sel = self.bedge_tags == tag
        return np.unique(self.bedge_nodes[sel].ravel())

    def boundary_edge_ids(self, tag: int) -> np.ndarray:
        return np.flatnonzero(self.bedge_tags == tag)

    # -- constraints ---------------------------------------------------------

    def _build_constraints(self):
        inlet = set(self.boundary_nodes(geometry.INLET))
        wall = set(self.boundary_nodes(geometry.WALL))
        outlet = set(self.boundary_nodes(geometry.OUTLET))
        self.inlet_corner_nodes = np.array(sorted(inlet & wall), dtype=np.int64)
        self.outlet_corner_nodes = np.array(sorted(outlet & wall), dtype=np.int64)
        self.dirichlet_wall_nodes = np.array(sorted(wall), dtype=np.int64)
        self.dirichlet_inlet_nodes = np.array(sorted(inlet - wall), dtype=np.int64)
        self.free_outlet_nodes = np.array(sorted(outlet - wall - inlet), dtype=np.int64)

        dir_nodes = np.concatenate([self.dirichlet_wall_nodes, self.dirichlet_inlet_nodes])
        self.dirichlet_vdofs = np.sort(np.concatenate([2 * dir_nodes, 2 * dir_nodes + 1]))
        mask = np.ones(self.n_vdofs, dtype=bool)
        mask[self.dirichlet_vdofs] = False
        self.free_vdofs = np.flatnonzero(mask)
        self.free_mask = mask

    def dirichlet_values(self, g_star, corner_tol: float = 1e-12) -> np.ndarray:
        """Velocity coefficients holding the Dirichlet data, zero elsewhere.

        Walls get zero; inlet nodes sample g_star.  A nonvanishing g_star at
        an inlet corner is overridden by the wall value with a warning.
        """
        vals = np.zeros(self.n_vdofs)
        if g_star is not None and len(self.dirichlet_inlet_nodes):
            pts = self.node_coords[self.dirichlet_inlet_nodes]
            gv = np.asarray(g_star(pts), dtype=float)
            vals[2 * self.dirichlet_inlet_nodes] = gv[:, 0]
            vals[2 * self.dirichlet_inlet_nodes + 1] = gv[:, 1]
        if g_star is not None and len(self.inlet_corner_nodes):
            gv = np.asarray(g_star(self.node_coords[self.inlet_corner_nodes]), dtype=float)
            bad = np.linalg.norm(gv, axis=1) > corner_tol
            if np.any(bad):
                warnings.warn("inflow data nonzero at an inlet corner; wall value 0 enforced", stacklevel=2)
        return vals

    # -- interpolation and evaluation ----------------------------------------

    def interpolate_velocity(self, func) -> np.ndarray:
        vals = np.asarray(func(self.node_coords), dtype=float)
        out = np.empty(self.n_vdofs)
        out[0::2] = vals[:, 0]
        out[1::2] = vals[:, 1]
        return out

    def interpolate_scalar(self, func) -> np.ndarray:
        return np.asarray(func(self.node_coords), dtype=float)

    def interpolate_pressure(self, func) -> np.ndarray:
        return np.asarray(func(self.mesh.vertices), dtype=float)

    def velocity_at_quadrature(self, coeffs) -> np.ndarray:
        """P2 field values at the volume quadrature points, shape (nt, nq, 2)."""
        elem = self.gather_velocity(coeffs)
        return np.einsum("qi,tic->tqc", self.p2, elem, optimize=True)

    def gather_velocity(self, coeffs) -> np.ndarray:
        """Nodal element values of a velocity coefficient vector, (nt, 6, 2)."""
        c = np.asarray(coeffs)
        out = np.empty((len(self.elem_nodes), 6, 2))
        out[:, :, 0] = c[2 * self.elem_nodes]
        out[:, :, 1] = c[2 * self.elem_nodes + 1]
        return out

    def gather_scalar(self, coeffs) -> np.ndarray:
        return np.asarray(coeffs)[self.elem_nodes]

    def locate(self, points, tol: float = 1e-10):
        """Containing triangle and barycentric coordinates for each point."""
        points = np.atleast_2d(points)
        p = self.mesh.vertices[self.mesh.triangles]
        out_t = np.full(len(points), -1, dtype=np.int64)
        out_b = np.zeros((len(points), 3))
        for i, x in enumerate(points):
            v0 = p[:, 0]
            d1 = p[:, 1] - v0
            d2 = p[:, 2] - v0
            r = x[None, :] - v0
            det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
            b1 = (r[:, 0] * d2[:, 1] - r[:, 1] * d2[:, 0]) / det
            b2 = (d1[:, 0] * r[:, 1] - d1[:, 1] * r[:, 0]) / det
            b0 = 1.0 - b1 - b2
            ok = (b0 >= -tol) & (b1 >= -tol) & (b2 >= -tol)
            hits = np.flatnonzero(ok)
            if len(hits) == 0:
                raise ValueError(f"point {x} is outside the mesh")
            out_t[i] = hits[0]
            out_b[i] = (b0[hits[0]], b1[hits[0]], b2[hits[0]])
        return out_t, out_b

    def eval_scalar(self, coeffs, points) -> np.ndarray:
        tids, bary = self.locate(points)
        vals = quad.p2_values(bary[:, 1:])
        elem = self.gather_scalar(coeffs)
        return np.einsum("pi,pi->p", vals, elem[tids])

    def eval_velocity(self, coeffs, points) -> np.ndarray:
        tids, bary = self.locate(points)
        vals = quad.p2_values(bary[:, 1:])
        elem = self.gather_velocity(coeffs)
        return np.einsum("pi,pic->pc", vals, elem[tids])

    # -- region helpers -------------------------------------------------------

    def triangles_in_regions(self, labels) -> np.ndarray:
        labels = set(labels)
        return np.flatnonzero(np.isin(self.mesh.region_labels, list(labels)))

    def nodes_in_regions(self, labels) -> np.ndarray:
        tsel = self.triangles_in_regions(labels)
        return np.unique(self.elem_nodes[tsel].ravel())

    def vertices_in_regions(self, labels) -> np.ndarray:
        tsel = self.triangles_in_regions(labels)
        return np.unique(self.mesh.triangles[tsel].ravel())


class ProblemData:
    """Viscosity, body force, inflow profile and outlet traction scalar.

    ``f`` and ``g_star`` map an (n, 2) array of points to (n, 2) values;
    ``sigma_star`` maps points to scalars (or is a constant).  Any of them
    may be None (zero).
    """

    def __init__(self, eta, f=None, g_star=None, sigma_star=None):
        if eta <= 0:
            raise ValueError("viscosity must be positive")
        self.eta = float(eta)
        self.f = f
        self.g_star = g_star
        self.sigma_star = sigma_star

    def f_values(self, points) -> np.ndarray:
        if self.f is None:
            return np.zeros((len(points), 2))
        return np.asarray(self.f(points), dtype=float)

    def sigma_values(self, points) -> np.ndarray:
        if self.sigma_star is None:
            return np.zeros(len(points))
        if np.isscalar(self.sigma_star):
            return np.full(len(points), float(self.sigma_star))
        return np.asarray(self.sigma_star(points), dtype=float)


@dataclass
class SolutionFields:
    """Velocity/pressure coefficients plus solver metadata."""

    velocity: np.ndarray
    pressure: np.ndarray
    residual_norms: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
