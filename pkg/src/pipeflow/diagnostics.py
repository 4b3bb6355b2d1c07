"""Post-solve checks: energy identity, constants, bounds, identity tests.

Everything here is assembled independently of the solver path (plain
quadrature), so a vanishing identity residual is a genuine cross-check of
the discretization and not a tautology.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as dla

from . import linalg
from .errors import ConstantsMissing
from .fem import assembly
from .fem.kernels import get_backend
from .fem.space import FESpace, ProblemData, SolutionFields
from .geometry import INLET, OUTLET
from .reference_flow import ReferenceFlow
from .solver import DDN, _force_l2, _sigma_l2_outlet


@dataclass
class EnergyReport:
    """Terms of the discrete energy identity for the shifted solution."""

    lhs: float                 # eta * |grad uhat|^2
    force_work: float
    traction_work: float
    ref_viscous: float         # -eta int grad W* : grad uhat
    ref_convection_ww: float   # -int (W*.grad W*).uhat
    ref_convection_uwu: float  # -int (uhat.grad W*).uhat
    ddn_dissipation: float     # 0.5 int_out ((u.nu) + [u.nu]^-) |uhat|^2  (>= 0)
    identity_residual: float   # relative
    inequality_ok: bool        # lhs <= retained right-hand terms
    backflow_energy: float     # int_out [u.nu]^- |u|^2  (>= 0)


def _outlet_quantities(space: FESpace, u_total, uhat):
    edge_ids = space.boundary_edge_ids(OUTLET)
    if len(edge_ids) == 0:
        return 0.0, 0.0, 0.0
    un = assembly.boundary_normal_trace(space, u_total, edge_ids)
    un_neg = assembly.negative_part(un)
    uhat_q = assembly.trace_at_quadrature(space, uhat, edge_ids)
    uhat2 = np.einsum("eqc,eqc->eq", uhat_q, uhat_q, optimize=True)
    u_q = assembly.trace_at_quadrature(space, u_total, edge_ids)
    u2 = np.einsum("eqc,eqc->eq", u_q, u_q, optimize=True)
    dissipation = 0.5 * assembly.boundary_scalar_integral(space, (un + un_neg) * uhat2, OUTLET)
    ddn_weighted = 0.5 * assembly.boundary_scalar_integral(space, un_neg * uhat2, OUTLET)
    backflow = assembly.boundary_scalar_integral(space, un_neg * u2, OUTLET)
    return dissipation, ddn_weighted, backflow


def energy_report(space: FESpace, data: ProblemData, wref: ReferenceFlow,
                  fields: SolutionFields) -> EnergyReport:
    """Assemble each term of the energy identity by quadrature.

    For solutions of the antisymmetrized convection form with the
    directional outflow condition, the identity residual is at roundoff;
    the inequality drops the boundary dissipation, whose integrand is
    pointwise nonnegative by the sign property of the negative-part kernel.
    """
    w = wref.w_star
    uhat = fields.velocity - w
    eta = data.eta
    lhs = eta * assembly.h1_seminorm(space, uhat) ** 2

    pts = space.quad_points.reshape(-1, 2)
    uhat_q = space.velocity_at_quadrature(uhat)
    f_q = data.f_values(pts).reshape(uhat_q.shape)
    force_work = float(np.einsum("tq,tqc,tqc->", space.wdet, f_q, uhat_q, optimize=True))

    edge_ids = space.boundary_edge_ids(OUTLET)
    if len(edge_ids):
        sig = data.sigma_values(assembly.edge_quad_points(space, edge_ids).reshape(-1, 2))
        sig = sig.reshape(len(edge_ids), -1)
        uhat_n = assembly.boundary_normal_trace(space, uhat, edge_ids)
        traction_work = assembly.boundary_scalar_integral(space, sig * uhat_n, OUTLET)
    else:
        traction_work = 0.0

    ref_viscous = -eta * assembly.h1_inner(space, w, uhat)
    ref_conv_ww = -assembly.convective_trilinear(space, w, w, uhat)
    ref_conv_uwu = -assembly.convective_trilinear(space, uhat, w, uhat)

    outlet = fields.metadata.get("outlet", DDN)
    dissipation, ddn_weighted, backflow = _outlet_quantities(space, fields.velocity, uhat)
    if outlet != DDN:
        dissipation -= ddn_weighted  # the plain traction condition has no kernel term

    retained = force_work + traction_work + ref_viscous + ref_conv_ww + ref_conv_uwu
    residual = lhs - (retained - dissipation)
    # Scale against the problem's energy magnitude, not just the terms: all
    # terms vanish together when the shifted solution is zero.
    energy_scale = eta * (assembly.h1_seminorm(space, w) ** 2 + lhs / eta)
    scale = max(abs(lhs), abs(force_work), abs(traction_work), abs(ref_viscous),
                abs(ref_conv_ww), abs(ref_conv_uwu), abs(dissipation), energy_scale, 1e-30)
    return EnergyReport(
        lhs=lhs,
        force_work=force_work,
        traction_work=traction_work,
        ref_viscous=ref_viscous,
        ref_convection_ww=ref_conv_ww,
        ref_convection_uwu=ref_conv_uwu,
        ddn_dissipation=dissipation,
        identity_residual=abs(residual) / scale,
        inequality_ok=bool(lhs <= retained + 1e-10 * scale),
        backflow_energy=backflow,
    )


# -- constants ------------------------------------------------------------------


@dataclass
class ConstantsEstimate:
    s_star: float          # discrete Sobolev constant of the L4 embedding
    trace_constant: float  # largest |v|^2_{L2(out)} / |grad v|^2
    infsup_constant: float
    m_star: float          # reference-flow amplification ratio
    omega_star: float      # eta * s_star / (2 m_star)
    eta: float
    n_samples: int
    seed: int


def divfree_projector(space: FESpace):
    """H1-orthogonal projector onto the discretely divergence-free subspace
    of the constrained velocity space (zero on inlet and walls)."""
    k = assembly.assemble_stiffness(space).to_scipy()
    b = assembly.assemble_divergence(space).to_scipy()
    free = space.free_vdofs
    k_ff = k[free][:, free]
    b_f = b[:, free]
    import scipy.sparse as sp

    mat = sp.bmat([[k_ff, -b_f.T], [b_f, None]], format="csr")
    fact = linalg.lu_factorize(linalg.SparseMatrix.from_scipy(mat))
    nf = len(free)

    def project(v_free: np.ndarray) -> np.ndarray:
        rhs = np.concatenate([k_ff @ v_free, np.zeros(b.shape[0])])
        return fact.solve(rhs)[:nf]

    return project


def l4_norm_free(space: FESpace):
    """Callback (value, gradient) of the L4 norm on free-dof vectors."""
    kern = get_backend()
    free = space.free_vdofs

    def norm(v_free: np.ndarray):
        full = np.zeros(space.n_vdofs)
        full[free] = v_free
        elem = space.gather_velocity(full)
        i4, grad_elem = kern.l4_value_grad(space.p2, space.wdet, elem)
        grad_full = np.zeros(space.n_vdofs)
        np.add.at(grad_full, 2 * space.elem_nodes, grad_elem[:, :, 0])
        np.add.at(grad_full, 2 * space.elem_nodes + 1, grad_elem[:, :, 1])
        value = i4 ** 0.25
        if i4 <= 0.0:
            return 0.0, grad_full[free]
        # gradient of (I4)^(1/4) with I4 = int |v|^4
        return value, 0.25 * i4 ** (-0.75) * grad_full[free]

    return norm


def estimate_sobolev_constant(space: FESpace, restarts: int = 20, iters: int = 200,
                              seed: int = 0, callback=None) -> tuple[float, np.ndarray]:
    """Discrete Sobolev constant by projected Rayleigh ascent with restarts.

    Maximizes |v|^2_{L4} / |grad v|^2 over the discretely divergence-free
    constrained space; the constant is the reciprocal of the best ratio.
    """
    k = assembly.assemble_stiffness(space).to_scipy()
    free = space.free_vdofs
    gram = linalg.SparseMatrix.from_scipy(k[free][:, free])
    project = divfree_projector(space)
    norm = l4_norm_free(space)
    rng = np.random.default_rng(seed)
    best_q, best_v = -np.inf, None
    for _ in range(restarts):
        x0 = rng.standard_normal(len(free))
        try:
            q, v = linalg.rayleigh_maximize(gram, norm, project, iters=iters, x0=x0, callback=callback)
        except linalg.NoConvergence:
            continue
        if q > best_q:
            best_q, best_v = q, v
    if best_v is None:
        raise linalg.NoConvergence(restarts, "no Rayleigh restart converged")
    return 1.0 / best_q, best_v


def estimate_trace_constant(space: FESpace) -> float:
    """Largest eigenvalue of the outlet boundary mass against the stiffness."""
    free = space.free_vdofs
    k = assembly.assemble_stiffness(space).to_scipy()[free][:, free]
    edge_ids = space.boundary_edge_ids(OUTLET)
    ones = np.ones((len(edge_ids), len(space.edge_w)))
    m = assembly.boundary_weighted_mass(space, edge_ids, ones).to_scipy()[free][:, free]
    mu, _ = linalg.power_iteration_generalized(linalg.SparseMatrix.from_scipy(m),
                                               linalg.SparseMatrix.from_scipy(k))
    return float(mu)


def estimate_infsup_constant(space: FESpace) -> float:
    """Discrete inf-sup constant of the pressure-velocity coupling.

    Smallest singular value of the coupling scaled by the Cholesky factors
    of the velocity stiffness and pressure mass Gram matrices.
    """
    free = space.free_vdofs
    k = assembly.assemble_stiffness(space).to_scipy()[free][:, free]
    b = assembly.assemble_divergence(space).to_scipy()[:, free]
    mp = assembly.assemble_pressure_mass(space).to_dense()
    fact = linalg.lu_factorize(linalg.SparseMatrix.from_scipy(k.tocsr()))
    bt = b.T.toarray()
    x = np.column_stack([fact.solve(bt[:, j]) for j in range(bt.shape[1])])
    schur = b @ x  # B K^{-1} B^T
    lchol = dla.cholesky(mp, lower=True)
    c = dla.solve_triangular(lchol, dla.solve_triangular(lchol, schur, lower=True).T, lower=True)
    sigma = linalg.smallest_singular_value(linalg.SparseMatrix.from_dense(c))
    return float(np.sqrt(sigma))


def random_inflow(domain, rng) -> callable:
    """Random corner-vanishing inflow profile with nonnegative influx."""
    h = domain.inlet.half_height
    t1 = domain.inlet.transform
    a = rng.standard_normal(3)
    flux = a[0] * 4 * h**3 / 3 + a[2] * 4 * h**5 / 15  # odd term integrates out
    if flux < 0:
        a = -a
    direction = t1.direction_to_global((1.0, 0.0))

    def g(points):
        loc = t1.apply(np.atleast_2d(points))
        y = loc[:, 1]
        profile = (h * h - y * y) * (a[0] + a[1] * y + a[2] * y * y)
        return profile[:, None] * direction[None, :]

    return g


def estimate_constants(space: FESpace, wref_builder, eta: float, n_samples: int = 8,
                       seed: int = 0, restarts: int = 20) -> ConstantsEstimate:
    """Estimate the constants entering the smallness threshold.

    The Sobolev constant comes from Rayleigh maximization over the discrete
    divergence-free space, the trace constant from a generalized
    eigenproblem, the inf-sup constant from the scaled coupling, and the
    amplification ratio from reference flows built for random inflows.
    The threshold combines them as eta * S / (2 M).
    """
    if space.domain is None:
        raise ValueError("constants estimation needs the domain spec")
    s_star, _ = estimate_sobolev_constant(space, restarts=restarts, seed=seed)
    trace_c = estimate_trace_constant(space)
    infsup = estimate_infsup_constant(space)
    rng = np.random.default_rng(seed + 1)
    m_star = 0.0
    for _ in range(n_samples):
        wref = wref_builder(random_inflow(space.domain, rng))
        if wref.report.g_surrogate > 0:
            m_star = max(m_star, wref.report.m_ratio)
    if m_star <= 0:
        raise ValueError("amplification ratio could not be estimated")
    return ConstantsEstimate(
        s_star=s_star,
        trace_constant=trace_c,
        infsup_constant=infsup,
        m_star=m_star,
        omega_star=eta * s_star / (2.0 * m_star),
        eta=eta,
        n_samples=n_samples,
        seed=seed,
    )


# -- a-priori bound ----------------------------------------------------------------


@dataclass
class BoundReport:
    lhs: float
    rhs_base: float
    c_star: float
    margin: float
    smallness_ok: bool


def apriori_bound_check(space: FESpace, data: ProblemData, wref: ReferenceFlow,
                        fields: SolutionFields, constants: ConstantsEstimate | None,
                        c_star: float | None = None) -> BoundReport:
    """Check the small-data a-priori bound with a calibrated constant.

    With ``c_star`` None this is a calibration run: the constant is
    reverse-engineered to make the bound tight (margin zero) and should be
    frozen by the caller for subsequent runs.  The smallness flag compares
    the inflow surrogate against the estimated threshold.
    """
    if constants is None:
        raise ConstantsMissing("estimate_constants must run before the bound check")
    uhat = fields.velocity - wref.w_star
    lhs = assembly.h1_seminorm(space, uhat)
    g_sur = wref.report.g_surrogate
    rhs_base = _force_l2(space, data) + _sigma_l2_outlet(space, data) + g_sur + g_sur**2
    if c_star is None:
        c_star = lhs / rhs_base if rhs_base > 0 else 0.0
    margin = c_star * rhs_base - lhs
    return BoundReport(lhs, rhs_base, c_star, margin, bool(g_sur < constants.omega_star))


# -- integration-by-parts identity tests --------------------------------------------


@dataclass
class IdentityReport:
    skew_gaps: list
    convective_gap_smooth: float
    skew_gap_smooth: float
    mesh_size: float


def _identity_gap(space: FESpace, v: np.ndarray, form: str) -> float:
    lhs = float(v @ assembly.assemble_convection(space, v, form).matvec(v))
    edge_ids = space.boundary_edge_ids(OUTLET)
    vn = assembly.boundary_normal_trace(space, v, edge_ids)
    v_q = assembly.trace_at_quadrature(space, v, edge_ids)
    v2 = np.einsum("eqc,eqc->eq", v_q, v_q, optimize=True)
    rhs = 0.5 * assembly.boundary_scalar_integral(space, vn * v2, OUTLET)
    scale = max(1.0, assembly.h1_seminorm(space, v) ** 3)
    return abs(lhs - rhs) / scale


def identity_tests(space: FESpace, seed: int = 0, n_random: int = 20,
                   smooth_field=None) -> IdentityReport:
    """Check the trilinear boundary identity on divergence-free fields.

    The antisymmetrized form satisfies it exactly for any projected field;
    the convective form leaves a consistency gap that shrinks under mesh
    refinement, reported for a fixed smooth field when one is supplied.
    """
    project = divfree_projector(space)
    rng = np.random.default_rng(seed)
    free = space.free_vdofs
    gaps = []
    for _ in range(n_random):
        v = np.zeros(space.n_vdofs)
        v[free] = project(rng.standard_normal(len(free)))
        gaps.append(_identity_gap(space, v, assembly.SKEW))
    conv_gap = skew_gap = float("nan")
    if smooth_field is not None:
        v = np.zeros(space.n_vdofs)
        v_full = space.interpolate_velocity(smooth_field)
        v[free] = project(v_full[free])
        conv_gap = _identity_gap(space, v, assembly.CONVECTIVE)
        skew_gap = _identity_gap(space, v, assembly.SKEW)
    return IdentityReport(gaps, conv_gap, skew_gap, space.mesh.max_edge_length())
