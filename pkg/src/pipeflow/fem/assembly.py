"""Assembly of the mixed weak forms on a Taylor-Hood space.

Volume kernels run through the selected backend (compiled or numpy) and can
be chunked over elements (PIPEFLOW_THREADS); triplets are always merged in
the fixed deterministic order defined by the sparse constructor, so the
assembled matrices are independent of the chunking.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .. import linalg
from ..geometry import OUTLET
from . import kernels
from .space import FESpace

CONVECTIVE = "convective"
SKEW = "skew"


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("PIPEFLOW_THREADS", "1")))
    except ValueError:
        return 1


def _chunked(fn, tsel, *per_elem_args, const_args=()):
    """Run an element kernel over chunks of the selected triangles."""
    n = len(tsel)
    threads = _thread_count()
    if threads == 1 or n < 4 * threads:
        return fn(*const_args, *(a[tsel] for a in per_elem_args))
    bounds = np.linspace(0, n, threads + 1, dtype=int)
    chunks = [tsel[bounds[k]:bounds[k + 1]] for k in range(threads)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda c: fn(*const_args, *(a[c] for a in per_elem_args)), chunks))
    return np.concatenate(parts, axis=0)


def _tsel(space: FESpace, tsel):
    if tsel is None:
        return np.arange(space.mesh.n_triangles)
    return np.asarray(tsel, dtype=np.int64)


def _scatter_scalar(space, tsel, blocks) -> linalg.SparseMatrix:
    nodes = space.elem_nodes[tsel]
    rows = np.repeat(nodes, 6, axis=1).ravel()
    cols = np.tile(nodes, (1, 6)).ravel()
    return linalg.assemble_from_triplets((rows, cols, blocks.ravel()), (space.n_nodes, space.n_nodes))


def _scatter_vector_blockdiag(space, tsel, blocks) -> linalg.SparseMatrix:
    """Scatter identical per-component 6x6 blocks into the 2*nn system."""
    nodes = space.elem_nodes[tsel]
    rows_i = np.repeat(nodes, 6, axis=1)
    cols_j = np.tile(nodes, (1, 6))
    rows = np.concatenate([2 * rows_i.ravel(), 2 * rows_i.ravel() + 1])
    cols = np.concatenate([2 * cols_j.ravel(), 2 * cols_j.ravel() + 1])
    vals = np.concatenate([blocks.ravel(), blocks.ravel()])
    return linalg.assemble_from_triplets((rows, cols, vals), (space.n_vdofs, space.n_vdofs))


def _scatter_vector_full(space, tsel, blocks) -> linalg.SparseMatrix:
    """Scatter (nt, 6, 2, 6, 2) blocks indexed [(i,c),(j,d)]."""
    nodes = space.elem_nodes[tsel]
    nt = len(tsel)
    rows = (2 * nodes[:, :, None, None, None] + np.arange(2)[None, None, :, None, None])
    cols = (2 * nodes[:, None, None, :, None] + np.arange(2)[None, None, None, None, :])
    rows = np.broadcast_to(rows, (nt, 6, 2, 6, 2)).ravel()
    cols = np.broadcast_to(cols, (nt, 6, 2, 6, 2)).ravel()
    return linalg.assemble_from_triplets((rows, cols, blocks.ravel()), (space.n_vdofs, space.n_vdofs))


# -- volume forms -------------------------------------------------------------

def assemble_scalar_stiffness(space: FESpace, tsel=None) -> linalg.SparseMatrix:
    tsel = _tsel(space, tsel)
    k = kernels.get_backend()
    blocks = _chunked(k.stiffness_elems, tsel, space.gphys, space.wdet)
    return _scatter_scalar(space, tsel, blocks)


def assemble_stiffness(space: FESpace, tsel=None) -> linalg.SparseMatrix:
    """Vector Laplacian int grad(u):grad(phi) (unit viscosity)."""
    tsel = _tsel(space, tsel)
    k = kernels.get_backend()
    blocks = _chunked(k.stiffness_elems, tsel, space.gphys, space.wdet)
    return _scatter_vector_blockdiag(space, tsel, blocks)


def assemble_scalar_mass(space: FESpace, tsel=None) -> linalg.SparseMatrix:
    tsel = _tsel(space, tsel)
    k = kernels.get_backend()
    blocks = _chunked(k.mass_elems, tsel, space.wdet, const_args=(space.p2,))
    return _scatter_scalar(space, tsel, blocks)


def assemble_velocity_mass(space: FESpace, tsel=None) -> linalg.SparseMatrix:
    tsel = _tsel(space, tsel)
    k = kernels.get_backend()
    blocks = _chunked(k.mass_elems, tsel, space.wdet, const_args=(space.p2,))
    return _scatter_vector_blockdiag(space, tsel, blocks)


def assemble_pressure_mass(space: FESpace, tsel=None) -> linalg.SparseMatrix:
    tsel = _tsel(space, tsel)
    blocks = np.einsum("tq,qk,ql->tkl", space.wdet[tsel], space.p1, space.p1, optimize=True)
    tri = space.mesh.triangles[tsel]
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    return linalg.assemble_from_triplets((rows, cols, blocks.ravel()), (space.n_pdofs, space.n_pdofs))


def assemble_divergence(space: FESpace, tsel=None) -> linalg.SparseMatrix:
    """Pressure-by-velocity pairing int q (div v), shape (nv, 2*nn)."""
    tsel = _tsel(space, tsel)
    k = kernels.get_backend()
    blocks = _chunked(k.divergence_elems, tsel, space.gphys, space.wdet, const_args=(space.p1,))
    tri = space.mesh.triangles[tsel]
    nodes = space.elem_nodes[tsel]
    nt = len(tsel)
    rows = np.broadcast_to(tri[:, :, None, None], (nt, 3, 6, 2)).ravel()
    cols = (2 * nodes[:, None, :, None] + np.arange(2)[None, None, None, :])
    cols = np.broadcast_to(cols, (nt, 3, 6, 2)).ravel()
    return linalg.assemble_from_triplets((rows, cols, blocks.ravel()), (space.n_pdofs, space.n_vdofs))


def assemble_convection(space: FESpace, a_coeffs, form: str = SKEW, tsel=None) -> linalg.SparseMatrix:
    """Transport operator for frozen transport field ``a``.

    CONVECTIVE is int (a.grad u).phi.  SKEW is its antisymmetrization plus
    half the (a.nu)-weighted boundary mass, so that <C(a)v, v> equals
    exactly 0.5 * int_bnd (a.nu)|v|^2 for every coefficient vector v.
    """
    tsel = _tsel(space, tsel)
    k = kernels.get_backend()
    a_elem = space.gather_velocity(a_coeffs)
    blocks = _chunked(k.convection_elems, tsel, space.gphys, space.wdet, a_elem, const_args=(space.p2,))
    c = _scatter_vector_blockdiag(space, tsel, blocks)
    if form == CONVECTIVE:
        return c
    if form != SKEW:
        raise ValueError(f"unknown convection form {form!r}")
    cs = c.to_scipy()
    w_q = boundary_normal_trace(space, a_coeffs, np.arange(len(space.bedge_tags)))
    mb = boundary_weighted_mass(space, np.arange(len(space.bedge_tags)), w_q)
    return linalg.SparseMatrix.from_scipy(0.5 * (cs - cs.T) + 0.5 * mb.to_scipy())


def assemble_transport_derivative(space: FESpace, u_coeffs, form: str = SKEW, tsel=None) -> linalg.SparseMatrix:
    """Derivative of a -> C_form(a) u at fixed operand u."""
    tsel = _tsel(space, tsel)
    k = kernels.get_backend()
    u_elem = space.gather_velocity(u_coeffs)
    g = _scatter_vector_full(space, tsel, _chunked(
        k.grad_coupling_elems, tsel, space.gphys, space.wdet, u_elem, const_args=(space.p2,)))
    if form == CONVECTIVE:
        return g
    if form != SKEW:
        raise ValueError(f"unknown convection form {form!r}")
    gt = _scatter_vector_full(space, tsel, _chunked(
        k.gradtest_coupling_elems, tsel, space.gphys, space.wdet, u_elem, const_args=(space.p2,)))
    all_edges = np.arange(len(space.bedge_tags))
    u_q = trace_at_quadrature(space, u_coeffs, all_edges)
    nu = np.broadcast_to(space.bedge_normal[all_edges][:, None, :], u_q.shape)
    bd = boundary_outer(space, all_edges, u_q, nu)
    return linalg.SparseMatrix.from_scipy(0.5 * (g.to_scipy() - gt.to_scipy()) + 0.5 * bd.to_scipy())


def assemble_body_force(space: FESpace, f_func, tsel=None) -> np.ndarray:
    tsel = _tsel(space, tsel)
    if f_func is None:
        return np.zeros(space.n_vdofs)
    k = kernels.get_backend()
    pts = space.quad_points[tsel]
    fvals = np.asarray(f_func(pts.reshape(-1, 2)), dtype=float).reshape(pts.shape)
    blocks = k.load_elems(space.p2, space.wdet[tsel], fvals)
    out = np.zeros(space.n_vdofs)
    nodes = space.elem_nodes[tsel]
    np.add.at(out, 2 * nodes, blocks[:, :, 0])
    np.add.at(out, 2 * nodes + 1, blocks[:, :, 1])
    return out


def assemble_scalar_load(space: FESpace, g_func=None, tsel=None) -> np.ndarray:
    """Scalar load int g phi_i (g = 1 when no function is given)."""
    tsel = _tsel(space, tsel)
    pts = space.quad_points[tsel]
    if g_func is None:
        gvals = np.ones(pts.shape[:2])
    else:
        gvals = np.asarray(g_func(pts.reshape(-1, 2)), dtype=float).reshape(pts.shape[:2])
    blocks = np.einsum("tq,tq,qi->ti", space.wdet[tsel], gvals, space.p2, optimize=True)
    out = np.zeros(space.n_nodes)
    np.add.at(out, space.elem_nodes[tsel], blocks)
    return out


# -- boundary forms ------------------------------------------------------------

def edge_quad_points(space: FESpace, edge_ids) -> np.ndarray:
    a = space.mesh.vertices[space.bedge_vertices[edge_ids, 0]]
    b = space.mesh.vertices[space.bedge_vertices[edge_ids, 1]]
    from .quadrature import EDGE_POINTS
    return a[:, None, :] + EDGE_POINTS[None, :, None] * (b - a)[:, None, :]


def trace_at_quadrature(space: FESpace, coeffs, edge_ids) -> np.ndarray:
    """Velocity trace values on edges, shape (ne, nqe, 2)."""
    c = np.asarray(coeffs)
    nodes = space.bedge_nodes[edge_ids]
    ev = np.empty((len(edge_ids), 3, 2))
    ev[:, :, 0] = c[2 * nodes]
    ev[:, :, 1] = c[2 * nodes + 1]
    return np.einsum("qi,eic->eqc", space.edge_p2, ev, optimize=True)


def scalar_trace_at_quadrature(space: FESpace, coeffs, edge_ids) -> np.ndarray:
    ev = np.asarray(coeffs)[space.bedge_nodes[edge_ids]]
    return np.einsum("qi,ei->eq", space.edge_p2, ev, optimize=True)


def boundary_normal_trace(space: FESpace, coeffs, edge_ids) -> np.ndarray:
    """(u . nu) at the edge quadrature points, shape (ne, nqe)."""
    u_q = trace_at_quadrature(space, coeffs, edge_ids)
    nu = space.bedge_normal[edge_ids]
    return np.einsum("eqc,ec->eq", u_q, nu, optimize=True)


def boundary_weighted_mass(space: FESpace, edge_ids, weight_q) -> linalg.SparseMatrix:
    """Component-diagonal boundary mass with a scalar quadrature weight."""
    w = space.edge_w[None, :] * np.asarray(weight_q) * space.bedge_length[edge_ids, None]
    blocks = np.einsum("eq,qi,qj->eij", w, space.edge_p2, space.edge_p2, optimize=True)
    nodes = space.bedge_nodes[edge_ids]
    rows_i = np.repeat(nodes, 3, axis=1)
    cols_j = np.tile(nodes, (1, 3))
    rows = np.concatenate([2 * rows_i.ravel(), 2 * rows_i.ravel() + 1])
    cols = np.concatenate([2 * cols_j.ravel(), 2 * cols_j.ravel() + 1])
    vals = np.concatenate([blocks.ravel(), blocks.ravel()])
    return linalg.assemble_from_triplets((rows, cols, vals), (space.n_vdofs, space.n_vdofs))


def boundary_outer(space: FESpace, edge_ids, row_vec_q, col_vec_q, scalar_q=None) -> linalg.SparseMatrix:
    """Boundary coupling int_bnd s (row_c phi_i)(col_d phi_j), full 2x2 blocks."""
    w = space.edge_w[None, :] * space.bedge_length[edge_ids, None]
    if scalar_q is not None:
        w = w * scalar_q
    blocks = np.einsum("eq,eqc,qi,eqd,qj->eicjd", w, row_vec_q, space.edge_p2, col_vec_q,
                       space.edge_p2, optimize=True)
    nodes = space.bedge_nodes[edge_ids]
    ne = len(edge_ids)
    rows = (2 * nodes[:, :, None, None, None] + np.arange(2)[None, None, :, None, None])
    cols = (2 * nodes[:, None, None, :, None] + np.arange(2)[None, None, None, None, :])
    rows = np.broadcast_to(rows, (ne, 3, 2, 3, 2)).ravel()
    cols = np.broadcast_to(cols, (ne, 3, 2, 3, 2)).ravel()
    return linalg.assemble_from_triplets((rows, cols, blocks.ravel()), (space.n_vdofs, space.n_vdofs))


def negative_part(z):
    """Pointwise kernel [z]^- = (|z| - z) / 2 (nonzero only for z < 0)."""
    z = np.asarray(z, dtype=float)
    return 0.5 * (np.abs(z) - z)


def assemble_ddn_boundary(space: FESpace, w_coeffs, wstar_coeffs):
    """Directional outflow term on the outlet, split as matrix.u - load.

    The matrix carries 0.5 * int_out [w.nu]^- (u.phi) with the weight
    evaluated at quadrature points; the load is the same form applied to
    the reference-flow trace.  The matrix is symmetric positive
    semidefinite because the weight is pointwise nonnegative.
    """
    edge_ids = space.boundary_edge_ids(OUTLET)
    wn = boundary_normal_trace(space, w_coeffs, edge_ids)
    mat = boundary_weighted_mass(space, edge_ids, 0.5 * negative_part(wn))
    load = mat.matvec(np.asarray(wstar_coeffs, dtype=float))
    return mat, load


def assemble_ddn_semismooth(space: FESpace, w_coeffs, uhat_coeffs) -> linalg.SparseMatrix:
    """Weight-linearization block of the outflow term.

    Rows test phi, columns carry the velocity perturbation: the a.e.
    derivative of [z]^- is -1 for z < 0 and 0 for z >= 0 (0 chosen at the
    kink), giving -0.5 * int_{w.nu < 0} (delta.nu)(uhat.phi).
    """
    edge_ids = space.boundary_edge_ids(OUTLET)
    wn = boundary_normal_trace(space, w_coeffs, edge_ids)
    active = (wn < 0.0).astype(float)
    uhat_q = trace_at_quadrature(space, uhat_coeffs, edge_ids)
    nu = np.broadcast_to(space.bedge_normal[edge_ids][:, None, :], uhat_q.shape)
    return linalg.SparseMatrix.from_scipy(
        -0.5 * boundary_outer(space, edge_ids, uhat_q, nu, scalar_q=active).to_scipy())


def assemble_outlet_traction(space: FESpace, sigma, tag: int = OUTLET) -> np.ndarray:
    """Load int_out sigma (phi . nu); sigma is a constant or point function."""
    edge_ids = space.boundary_edge_ids(tag)
    out = np.zeros(space.n_vdofs)
    if len(edge_ids) == 0:
        return out
    pts = edge_quad_points(space, edge_ids)
    if sigma is None:
        return out
    if np.isscalar(sigma):
        sig = np.full(pts.shape[:2], float(sigma))
    else:
        sig = np.asarray(sigma(pts.reshape(-1, 2)), dtype=float).reshape(pts.shape[:2])
    w = space.edge_w[None, :] * sig * space.bedge_length[edge_ids, None]
    nu = space.bedge_normal[edge_ids]
    blocks = np.einsum("eq,qi,ec->eic", w, space.edge_p2, nu, optimize=True)
    nodes = space.bedge_nodes[edge_ids]
    np.add.at(out, 2 * nodes, blocks[:, :, 0])
    np.add.at(out, 2 * nodes + 1, blocks[:, :, 1])
    return out


def boundary_velocity_gradient(space: FESpace, coeffs, edge_ids) -> np.ndarray:
    """Gradient tensor of the volume field at edge quadrature points.

    Uses the owning triangle of each boundary edge; shape (ne, nqe, 2, 2).
    """
    from .quadrature import EDGE_POINTS, p2_gradients

    elem = space.gather_velocity(coeffs)
    out = np.empty((len(edge_ids), len(EDGE_POINTS), 2, 2))
    for row, e in enumerate(np.asarray(edge_ids)):
        t, k = space.bedge_owner[e]
        bary = np.zeros((len(EDGE_POINTS), 3))
        bary[:, k] = 1.0 - EDGE_POINTS
        bary[:, (k + 1) % 3] = EDGE_POINTS
        gref = p2_gradients(bary[:, 1:])
        p = space.mesh.vertices[space.mesh.triangles[t]]
        jac = np.stack([p[1] - p[0], p[2] - p[0]], axis=1)
        inv = np.linalg.inv(jac)
        gphys = np.einsum("qid,de->qie", gref, inv)
        out[row] = np.einsum("ic,qid->qcd", elem[t], gphys)
    return out


def boundary_flux(space: FESpace, coeffs, tag: int) -> float:
    """int_tag u . nu over the tagged boundary portion."""
    edge_ids = space.boundary_edge_ids(tag)
    if len(edge_ids) == 0:
        return 0.0
    un = boundary_normal_trace(space, coeffs, edge_ids)
    return float(np.einsum("eq,q,e->", un, space.edge_w, space.bedge_length[edge_ids], optimize=True))


def boundary_scalar_integral(space: FESpace, values_q, tag: int) -> float:
    edge_ids = space.boundary_edge_ids(tag)
    return float(np.einsum("eq,q,e->", values_q, space.edge_w, space.bedge_length[edge_ids], optimize=True))


# -- norms and errors ----------------------------------------------------------

def velocity_gradient_at_quadrature(space: FESpace, coeffs, tsel=None) -> np.ndarray:
    """Gradient tensor d u_c / d x_d at quadrature points, (nt, nq, 2, 2)."""
    tsel = _tsel(space, tsel)
    elem = space.gather_velocity(coeffs)[tsel]
    return np.einsum("tic,tqid->tqcd", elem, space.gphys[tsel], optimize=True)


def h1_seminorm(space: FESpace, coeffs, tsel=None) -> float:
    tsel = _tsel(space, tsel)
    g = velocity_gradient_at_quadrature(space, coeffs, tsel)
    return float(np.sqrt(np.einsum("tq,tqcd,tqcd->", space.wdet[tsel], g, g, optimize=True)))


def velocity_l2(space: FESpace, coeffs, tsel=None) -> float:
    tsel = _tsel(space, tsel)
    v = space.velocity_at_quadrature(coeffs)[tsel]
    return float(np.sqrt(np.einsum("tq,tqc,tqc->", space.wdet[tsel], v, v, optimize=True)))


def scalar_l2(space: FESpace, coeffs, tsel=None) -> float:
    tsel = _tsel(space, tsel)
    v = np.einsum("qi,ti->tq", space.p2, space.gather_scalar(coeffs)[tsel], optimize=True)
    return float(np.sqrt(np.einsum("tq,tq,tq->", space.wdet[tsel], v, v, optimize=True)))


def scalar_h1_seminorm(space: FESpace, coeffs, tsel=None) -> float:
    tsel = _tsel(space, tsel)
    g = np.einsum("ti,tqid->tqd", space.gather_scalar(coeffs)[tsel], space.gphys[tsel], optimize=True)
    return float(np.sqrt(np.einsum("tq,tqd,tqd->", space.wdet[tsel], g, g, optimize=True)))


def pressure_at_quadrature(space: FESpace, coeffs, tsel=None) -> np.ndarray:
    tsel = _tsel(space, tsel)
    pv = np.asarray(coeffs)[space.mesh.triangles[tsel]]
    return np.einsum("qk,tk->tq", space.p1, pv, optimize=True)


def pressure_l2(space: FESpace, coeffs, tsel=None) -> float:
    tsel = _tsel(space, tsel)
    v = pressure_at_quadrature(space, coeffs, tsel)
    return float(np.sqrt(np.einsum("tq,tq,tq->", space.wdet[tsel], v, v, optimize=True)))


def error_norms(space: FESpace, fields, exact) -> tuple[float, float, float]:
    """(L2 velocity, H1 velocity, L2 pressure) errors against closed forms.

    ``exact`` provides velocity(points), pressure(points) and, for the H1
    error, velocity_grad(points) returning (n, 2, 2) tensors.
    """
    pts = space.quad_points.reshape(-1, 2)
    u_q = space.velocity_at_quadrature(fields.velocity)
    du = u_q - np.asarray(exact.velocity(pts), dtype=float).reshape(u_q.shape)
    l2v = float(np.sqrt(np.einsum("tq,tqc,tqc->", space.wdet, du, du, optimize=True)))
    h1v = l2v * l2v
    if getattr(exact, "velocity_grad", None) is not None:
        g_q = velocity_gradient_at_quadrature(space, fields.velocity)
        dg = g_q - np.asarray(exact.velocity_grad(pts), dtype=float).reshape(g_q.shape)
        h1v += float(np.einsum("tq,tqcd,tqcd->", space.wdet, dg, dg, optimize=True))
    p_q = pressure_at_quadrature(space, fields.pressure)
    dp = p_q - np.asarray(exact.pressure(pts), dtype=float).reshape(p_q.shape)
    l2p = float(np.sqrt(np.einsum("tq,tq,tq->", space.wdet, dp, dp, optimize=True)))
    return l2v, float(np.sqrt(h1v)), l2p


def convective_trilinear(space: FESpace, a_coeffs, u_coeffs, v_coeffs) -> float:
    """Plain quadrature value of int (a . grad u) . v."""
    a_q = space.velocity_at_quadrature(a_coeffs)
    v_q = space.velocity_at_quadrature(v_coeffs)
    gu = velocity_gradient_at_quadrature(space, u_coeffs)
    return float(np.einsum("tq,tqd,tqcd,tqc->", space.wdet, a_q, gu, v_q, optimize=True))


def h1_inner(space: FESpace, u_coeffs, v_coeffs) -> float:
    gu = velocity_gradient_at_quadrature(space, u_coeffs)
    gv = velocity_gradient_at_quadrature(space, v_coeffs)
    return float(np.einsum("tq,tqcd,tqcd->", space.wdet, gu, gv, optimize=True))


# -- mixed systems --------------------------------------------------------------

@dataclass
class MixedSystem:
    """Velocity-block operator, divergence pairing and right-hand sides."""

    a: sp.spmatrix
    b: sp.spmatrix
    rhs_v: np.ndarray
    rhs_p: np.ndarray


@dataclass
class ReducedSystem:
    matrix: linalg.SparseMatrix
    rhs: np.ndarray
    free_vdofs: np.ndarray
    pressure_ids: np.ndarray
    dirichlet: np.ndarray
    n_vdofs: int
    n_pdofs: int
    has_gauge: bool

    def solve(self, factor=None):
        f = factor or linalg.lu_factorize(self.matrix)
        x = f.solve(self.rhs)
        nf = len(self.free_vdofs)
        u = np.array(self.dirichlet, dtype=float)
        u[self.free_vdofs] = x[:nf]
        p = np.zeros(self.n_pdofs)
        p[self.pressure_ids] = x[nf:nf + len(self.pressure_ids)]
        return u, p


def reduce_mixed(system: MixedSystem, free_vdofs, pressure_ids, dirichlet_values,
                 gauge_weights=None) -> ReducedSystem:
    """Eliminate Dirichlet velocity dofs and restrict the pressure space.

    Momentum rows are the free velocity dofs of ``A u - B^T p = rhs_v``;
    continuity rows are ``B u = rhs_p`` at the selected pressure ids.  An
    optional gauge row enforces ``gauge_weights . p = 0`` via a Lagrange
    multiplier (needed by all-Dirichlet subproblems).
    """
    a = system.a.tocsr()
    b = system.b.tocsr()
    g = np.asarray(dirichlet_values, dtype=float)
    free = np.asarray(free_vdofs, dtype=np.int64)
    pids = np.asarray(pressure_ids, dtype=np.int64)

    a_ff = a[free][:, free]
    b_pf = b[pids][:, free]
    rhs_v = system.rhs_v[free] - a[free] @ g
    rhs_p = system.rhs_p[pids] - b[pids] @ g
    blocks = [[a_ff, -b_pf.T], [b_pf, None]]
    rhs = [rhs_v, rhs_p]
    if gauge_weights is not None:
        w = sp.csr_matrix(np.asarray(gauge_weights, dtype=float)[pids][None, :])
        blocks[0].append(None)
        blocks[1].append(w.T)
        blocks.append([None, w, None])
        rhs.append(np.zeros(1))
    mat = sp.bmat(blocks, format="csr")
    return ReducedSystem(linalg.SparseMatrix.from_scipy(mat), np.concatenate(rhs), free, pids,
                         g, system.a.shape[0], system.b.shape[0], gauge_weights is not None)


def apply_dirichlet(system: MixedSystem, space: FESpace, g_star) -> ReducedSystem:
    """Constrain inlet/wall velocity dofs of a channel problem symmetrically."""
    dirichlet = space.dirichlet_values(g_star)
    return reduce_mixed(system, space.free_vdofs, np.arange(space.n_pdofs), dirichlet)


def scalar_dirichlet_solve(space: FESpace, k_mat: linalg.SparseMatrix, load: np.ndarray,
                           dirichlet_nodes, dirichlet_values: np.ndarray) -> np.ndarray:
    """Solve K x = load with values pinned at the given nodes (natural
    boundary conditions elsewhere)."""
    k = k_mat.to_scipy()
    mask = np.ones(space.n_nodes, dtype=bool)
    mask[np.asarray(dirichlet_nodes, dtype=np.int64)] = False
    free = np.flatnonzero(mask)
    g = np.asarray(dirichlet_values, dtype=float)
    rhs = load[free] - k[free] @ g
    x_f = linalg.solve_sparse(linalg.SparseMatrix.from_scipy(k[free][:, free]), rhs)
    out = g.copy()
    out[free] = x_f
    return out
