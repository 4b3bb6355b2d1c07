"""Fully developed pipe profiles and the divergence-free reference flow.

The reference flow lifts the inflow data into the channel: a Stokes solve on
the truncated domain, a quintic cutoff blend toward the outlet Poiseuille
field, a divergence correction supported on the first third of the outlet
section, and a scalar extension of the outlet traction.  The result matches
the inflow on the inlet, vanishes on the walls, equals the outlet Poiseuille
flow near the outlet and is discretely divergence-free.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CompatibilityError, NegativeInflux
from .fem import assembly
from .fem.space import FESpace, ProblemData
from .geometry import INLET, OMEGA0, OMEGA1, OMEGA2, OMEGA_SHARP, OUTLET, RigidTransform


@dataclass(frozen=True)
class PoiseuilleFlow:
    """Fully developed flow of a straight section, in global coordinates.

    Local form: velocity (3 Phi / 4 h^3) (h^2 - y^2, 0), pressure
    -(3 eta Phi / 2 h^3)(x - length); the pressure vanishes at the
    section's outflow end.
    """

    section: int
    flux: float
    half_height: float
    length: float
    eta: float
    transform: RigidTransform

    def velocity(self, points) -> np.ndarray:
        pts = np.atleast_2d(points)
        loc = self.transform.apply(pts)
        h = self.half_height
        ux = (3.0 * self.flux / (4.0 * h**3)) * (h * h - loc[:, 1] ** 2)
        local = np.column_stack([ux, np.zeros_like(ux)])
        return local @ self.transform.rotation

    def pressure(self, points) -> np.ndarray:
        pts = np.atleast_2d(points)
        loc = self.transform.apply(pts)
        h = self.half_height
        return -(3.0 * self.eta * self.flux / (2.0 * h**3)) * (loc[:, 0] - self.length)

    def velocity_grad(self, points) -> np.ndarray:
        """Gradient tensor d u_c / d x_d in global coordinates, (n, 2, 2)."""
        pts = np.atleast_2d(points)
        loc = self.transform.apply(pts)
        h = self.half_height
        dudy = (3.0 * self.flux / (4.0 * h**3)) * (-2.0 * loc[:, 1])
        g_loc = np.zeros((len(pts), 2, 2))
        g_loc[:, 0, 1] = dudy
        q = self.transform.rotation
        return np.einsum("ca,nab,db->ncd", q.T, g_loc, q.T, optimize=True)


def poiseuille_2d(section: int, flux: float, half_height: float, length: float, eta: float,
                  transform: RigidTransform | None = None) -> PoiseuilleFlow:
    if half_height <= 0 or length <= 0 or eta <= 0:
        raise ValueError("half-height, length and viscosity must be positive")
    if flux < 0:
        raise ValueError("flux must be nonnegative")
    return PoiseuilleFlow(section, float(flux), float(half_height), float(length), float(eta),
                          transform or RigidTransform.identity())


@dataclass
class TorsionSolution:
    """Cross-section torsion profile: -Lap u = 1, u = 0 on the boundary."""

    space: FESpace
    values: np.ndarray
    rho: float

    def eval(self, points) -> np.ndarray:
        return self.space.eval_scalar(self.values, points)


def torsion_solve(mesh, tol: float = 1e-10) -> TorsionSolution:
    space = FESpace(mesh)
    k = assembly.assemble_scalar_stiffness(space)
    load = assembly.assemble_scalar_load(space)
    bnodes = np.unique(space.bedge_nodes.ravel())
    u = assembly.scalar_dirichlet_solve(space, k, load, bnodes, np.zeros(space.n_nodes))
    resid = np.linalg.norm((k.matvec(u) - load)[np.setdiff1d(np.arange(space.n_nodes), bnodes)])
    if resid > tol * max(1.0, np.linalg.norm(load)):
        raise RuntimeError(f"torsion residual {resid:.3e} above tolerance {tol:.3e}")
    rho = float(load @ u)
    if u.min() < -1e-12:
        raise RuntimeError(f"torsion solution violates the maximum principle: min {u.min():.3e}")
    if rho <= 0:
        raise RuntimeError("torsion integral must be positive")
    return TorsionSolution(space, u, rho)


@dataclass
class AxialProfile:
    """Fully developed axial speed of a 3D section, normalized to the flux."""

    torsion: TorsionSolution
    flux: float
    eta: float

    @property
    def pressure_slope(self) -> float:
        return -self.eta * self.flux / self.torsion.rho

    def speed(self, points) -> np.ndarray:
        return (self.flux / self.torsion.rho) * self.torsion.eval(points)

    def cross_section_flux(self) -> float:
        load = assembly.assemble_scalar_load(self.torsion.space)
        return (self.flux / self.torsion.rho) * float(load @ self.torsion.values)


def poiseuille_3d_profile(torsion: TorsionSolution, flux: float, eta: float) -> AxialProfile:
    if torsion.rho <= 0:
        raise ValueError("torsion integral must be positive")
    return AxialProfile(torsion, float(flux), float(eta))


def influx(space: FESpace, g_star) -> float:
    """Flux of the inflow data into the domain: -int_in g . nu."""
    if g_star is None:
        return 0.0
    coeffs = np.zeros(space.n_vdofs)
    inlet_nodes = space.boundary_nodes(INLET)
    vals = np.asarray(g_star(space.node_coords[inlet_nodes]), dtype=float)
    coeffs[2 * inlet_nodes] = vals[:, 0]
    coeffs[2 * inlet_nodes + 1] = vals[:, 1]
    phi = -assembly.boundary_flux(space, coeffs, INLET)
    if phi < -1e-12:
        raise NegativeInflux(f"influx {phi:.3e} is negative")
    return max(phi, 0.0)


# -- Taylor-Couette operator check ---------------------------------------------

def taylor_couette_velocity(points) -> np.ndarray:
    """Swirl field (rho - 1/rho) in the angular direction, in Cartesian form."""
    pts = np.atleast_2d(points)
    x, y = pts[:, 0], pts[:, 1]
    r2 = x * x + y * y
    return np.column_stack([-y + y / r2, x - x / r2])


def taylor_couette_laplacian(points) -> np.ndarray:
    """Componentwise Laplacian from term-by-term analytic differentiation."""
    pts = np.atleast_2d(points)
    x, y = pts[:, 0], pts[:, 1]
    r2 = x * x + y * y
    r4, r6 = r2 * r2, r2 * r2 * r2
    lap_x = (-2 * y / r4 + 8 * x * x * y / r6) + (-6 * y / r4 + 8 * y**3 / r6)
    lap_y = -((-6 * x / r4 + 8 * x**3 / r6) + (-2 * x / r4 + 8 * x * y * y / r6))
    return np.column_stack([lap_x, lap_y])


def taylor_couette_divergence(points) -> np.ndarray:
    pts = np.atleast_2d(points)
    x, y = pts[:, 0], pts[:, 1]
    r4 = (x * x + y * y) ** 2
    return (-2 * x * y / r4) - (-2 * x * y / r4)


@dataclass
class TaylorCouetteReport:
    max_laplacian: float
    max_divergence: float
    max_inner_boundary: float


def taylor_couette_check(samples=None, n: int = 1000, outer_radius: float = 2.0,
                         seed: int = 0) -> TaylorCouetteReport:
    """Residuals of the harmonic solenoidal annulus field.

    Validates the implemented differential-operator evaluators against a
    nontrivial field: both analytic residuals must vanish to roundoff, as
    must the trace on the unit circle.
    """
    if samples is None:
        rng = np.random.default_rng(seed)
        rho = np.sqrt(rng.uniform(1.0, outer_radius**2, n))  # stay inside the annulus
        rho = np.clip(rho, 1.0 + 1e-6, None)
        theta = rng.uniform(0.0, 2.0 * np.pi, n)
        samples = np.column_stack([rho * np.cos(theta), rho * np.sin(theta)])
    samples = np.atleast_2d(samples)
    lap = np.abs(taylor_couette_laplacian(samples)).max()
    div = np.abs(taylor_couette_divergence(samples)).max()
    theta = np.linspace(0.0, 2.0 * np.pi, 720, endpoint=False)
    circle = np.column_stack([np.cos(theta), np.sin(theta)])
    inner = np.abs(taylor_couette_velocity(circle)).max()
    return TaylorCouetteReport(float(lap), float(div), float(inner))


# -- reference flow -------------------------------------------------------------

def cutoff(x2, length2: float) -> np.ndarray:
    """C2 monotone quintic cutoff in the outlet axial coordinate.

    Equals 1 below length2/12 and 0 above length2/4; the transition band
    sits strictly inside the first third of the outlet section.
    """
    a, b = length2 / 12.0, length2 / 4.0
    s = np.clip((np.asarray(x2, dtype=float) - a) / (b - a), 0.0, 1.0)
    return 1.0 - (10.0 * s**3 - 15.0 * s**4 + 6.0 * s**5)


@dataclass
class ConstructionReport:
    phi_star: float
    compat_residual: float
    div_residual: float
    w_h1: float
    g_surrogate: float
    m_ratio: float
    pi_h1: float
    sigma_surrogate: float


@dataclass
class ReferenceFlow:
    """Discrete (W*, Pi*) pair with influx and construction diagnostics."""

    w_star: np.ndarray
    pi_star: np.ndarray
    phi_star: float
    outlet_flow: PoiseuilleFlow
    report: ConstructionReport


def harmonic_lift_norm(space: FESpace, g_star, k_scalar=None) -> float:
    """H1 norm of the componentwise harmonic lift of the inflow data.

    Dirichlet data on the inlet and walls (zero there), natural on the
    outlet; used as the computable surrogate of the inflow trace norm.
    """
    if g_star is None:
        return 0.0
    k = k_scalar or assembly.assemble_scalar_stiffness(space)
    dir_nodes = np.unique(np.concatenate([space.dirichlet_inlet_nodes, space.dirichlet_wall_nodes]))
    vals = space.dirichlet_values(g_star)
    total = 0.0
    for comp in range(2):
        g = np.zeros(space.n_nodes)
        g[dir_nodes] = vals[2 * dir_nodes + comp]
        lift = assembly.scalar_dirichlet_solve(space, k, np.zeros(space.n_nodes), dir_nodes, g)
        total += assembly.scalar_h1_seminorm(space, lift) ** 2 + assembly.scalar_l2(space, lift) ** 2
    return float(np.sqrt(total))


def build_reference_flow(space: FESpace, data: ProblemData, k_mat=None, b_mat=None,
                         k_scalar=None) -> ReferenceFlow:
    """Construct the discrete reference flow for the given problem data.

    (a) Stokes solve on the truncated domain (inlet data, no-slip walls,
        outlet Poiseuille on the interior interface), flux compatibility
        checked; (b) quintic blend toward the outlet Poiseuille field on
    the first third of the outlet section; (c) divergence correction with
    zero trace supported there; (d) paste; (e) harmonic extension of the
    negated outlet traction for the scalar companion field.
    """
    if space.domain is None:
        raise ValueError("reference flow needs the FESpace to carry its DomainSpec")
    dom = space.domain
    eta = data.eta
    k = k_mat or assembly.assemble_stiffness(space)
    b = b_mat or assembly.assemble_divergence(space)
    ks = k.to_scipy() * eta
    bs = b.to_scipy()

    phi_star = influx(space, data.g_star)
    s2 = dom.outlet
    v2 = poiseuille_2d(2, phi_star, s2.half_height, s2.length, eta, s2.transform)
    v2_nodal = space.interpolate_velocity(v2.velocity)

    dirichlet = space.dirichlet_values(data.g_star)
    star_nodes = space.nodes_in_regions({OMEGA0, OMEGA1, OMEGA_SHARP})
    sharp_nodes = space.nodes_in_regions({OMEGA_SHARP})
    omega2_nodes = space.nodes_in_regions({OMEGA2})
    gamma_star_nodes = np.intersect1d(sharp_nodes, omega2_nodes)

    u_dir = dirichlet.copy()
    u_dir[2 * gamma_star_nodes] = v2_nodal[2 * gamma_star_nodes]
    u_dir[2 * gamma_star_nodes + 1] = v2_nodal[2 * gamma_star_nodes + 1]

    constrained = set(space.dirichlet_wall_nodes) | set(space.dirichlet_inlet_nodes) | set(gamma_star_nodes)
    free_nodes = np.array(sorted(set(star_nodes) - constrained), dtype=np.int64)
    free_vdofs = np.sort(np.concatenate([2 * free_nodes, 2 * free_nodes + 1]))

    star_tris = space.triangles_in_regions({OMEGA0, OMEGA1, OMEGA_SHARP})
    star_verts = space.vertices_in_regions({OMEGA0, OMEGA1, OMEGA_SHARP})
    gauge = _p1_masses(space, star_tris)
    b_star = assembly.assemble_divergence(space, tsel=star_tris).to_scipy()
    compat = float(np.sum(b_star @ u_dir))
    if abs(compat) > 1e-10 * max(1.0, abs(phi_star)):
        raise CompatibilityError(f"boundary flux mismatch {compat:.3e} on the truncated domain")

    system = assembly.MixedSystem(ks, b_star, np.zeros(space.n_vdofs), np.zeros(space.n_pdofs))
    reduced = assembly.reduce_mixed(system, free_vdofs, star_verts, u_dir, gauge_weights=gauge)
    w0, _ = reduced.solve()

    # Blend toward the outlet Poiseuille profile inside the first third.
    x2 = s2.transform.apply(space.node_coords)[:, 0]
    zeta = cutoff(x2, s2.length)
    w_pre = w0.copy()
    for c in range(2):
        w_pre[2 * sharp_nodes + c] = (zeta[sharp_nodes] * w0[2 * sharp_nodes + c]
                                      + (1.0 - zeta[sharp_nodes]) * v2_nodal[2 * sharp_nodes + c])
        w_pre[2 * omega2_nodes + c] = v2_nodal[2 * omega2_nodes + c]

    defect = bs @ w_pre
    sharp_tris = space.triangles_in_regions({OMEGA_SHARP})
    sharp_verts = space.vertices_in_regions({OMEGA_SHARP})
    interior_sharp = np.array(sorted(set(sharp_nodes)
                                     - set(space.nodes_in_regions({OMEGA0, OMEGA1, OMEGA2}))
                                     - set(space.dirichlet_wall_nodes)), dtype=np.int64)
    corr_free = np.sort(np.concatenate([2 * interior_sharp, 2 * interior_sharp + 1]))
    corr_system = assembly.MixedSystem(ks, bs, np.zeros(space.n_vdofs), -defect)
    corr_reduced = assembly.reduce_mixed(corr_system, corr_free, sharp_verts,
                                         np.zeros(space.n_vdofs), gauge_weights=_p1_masses(space, sharp_tris))
    j0, _ = corr_reduced.solve()
    w_star = w_pre + j0

    scale = max(1.0, float(np.abs(bs @ dirichlet).max()), abs(phi_star))
    div_residual = float(np.abs(bs @ w_star).max()) / scale

    ksc = k_scalar or assembly.assemble_scalar_stiffness(space)
    outlet_nodes = space.boundary_nodes(OUTLET)
    pi_dir = np.zeros(space.n_nodes)
    pi_dir[outlet_nodes] = -data.sigma_values(space.node_coords[outlet_nodes])
    pi_star = assembly.scalar_dirichlet_solve(space, ksc, np.zeros(space.n_nodes), outlet_nodes, pi_dir)

    w_h1 = float(np.sqrt(assembly.h1_seminorm(space, w_star) ** 2 + assembly.velocity_l2(space, w_star) ** 2))
    g_sur = harmonic_lift_norm(space, data.g_star, k_scalar=ksc)
    sigma_l2 = _sigma_l2(space, data)
    pi_h1 = float(np.sqrt(assembly.scalar_h1_seminorm(space, pi_star) ** 2
                          + assembly.scalar_l2(space, pi_star) ** 2))
    report = ConstructionReport(
        phi_star=phi_star,
        compat_residual=abs(compat),
        div_residual=div_residual,
        w_h1=w_h1,
        g_surrogate=g_sur,
        m_ratio=w_h1 / g_sur if g_sur > 0 else 0.0,
        pi_h1=pi_h1,
        sigma_surrogate=sigma_l2 + assembly.scalar_h1_seminorm(space, pi_star),
    )
    return ReferenceFlow(w_star, pi_star, phi_star, v2, report)


def _sigma_l2(space: FESpace, data: ProblemData) -> float:
    edge_ids = space.boundary_edge_ids(OUTLET)
    if len(edge_ids) == 0:
        return 0.0
    pts = assembly.edge_quad_points(space, edge_ids)
    sig = data.sigma_values(pts.reshape(-1, 2)).reshape(pts.shape[:2])
    return float(np.sqrt(assembly.boundary_scalar_integral(space, sig * sig, OUTLET)))


def _p1_masses(space: FESpace, tsel) -> np.ndarray:
    """Lumped P1 integrals int psi_v over a triangle subset (gauge weights)."""
    areas = space.mesh.triangle_areas()[tsel]
    out = np.zeros(space.n_pdofs)
    np.add.at(out, space.mesh.triangles[tsel].ravel(), np.repeat(areas / 3.0, 3))
    return out
