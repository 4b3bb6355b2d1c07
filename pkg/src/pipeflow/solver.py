"""Nonlinear solvers for the mixed outflow problem.

The unknown is the shifted velocity (total minus reference flow), which is
homogeneous on the inlet and walls, plus the native mixed pressure.  Picard
freezes the transport field and the outflow weight; Newton linearizes both
convection slots and takes the almost-everywhere derivative of the negative
part kernel.  The continuation driver follows the one-parameter family that
scales every nonlinear and data term while leaving the viscous term alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import linalg
from .errors import ContinuationStalled, Diverged, LineSearchFailure
from .fem import assembly
from .fem.space import FESpace, ProblemData, SolutionFields
from .geometry import OUTLET
from .reference_flow import ReferenceFlow, build_reference_flow

PICARD = "picard"
NEWTON = "newton"
PICARD_THEN_NEWTON = "picard_then_newton"
DDN = "ddn"
DO_NOTHING = "do_nothing"


@dataclass
class SolverConfig:
    linearization: str = PICARD_THEN_NEWTON
    outlet_condition: str = DDN
    convection_form: str = assembly.SKEW
    tol_rel: float = 1e-10
    tol_abs: float = 1e-13
    max_iter: int = 60
    picard_iters: int = 5
    picard_switch_tol: float = 1e-3
    lambda_initial_step: float = 0.25
    lambda_min_step: float = 1e-4
    lambda_growth: float = 1.5
    divergence_streak: int = 5

    def __post_init__(self):
        if self.tol_rel <= 0 or self.tol_abs <= 0:
            raise ValueError("tolerances must be positive")
        if not (0 < self.lambda_initial_step <= 1 and 0 < self.lambda_min_step <= 1):
            raise ValueError("lambda steps must lie in (0, 1]")
        if self.linearization not in (PICARD, NEWTON, PICARD_THEN_NEWTON):
            raise ValueError(f"unknown linearization {self.linearization!r}")
        if self.outlet_condition not in (DDN, DO_NOTHING):
            raise ValueError(f"unknown outlet condition {self.outlet_condition!r}")


@dataclass
class NonlinearResidual:
    """Residual blocks of the shifted system at one iterate."""

    momentum: np.ndarray   # restricted to free velocity dofs
    continuity: np.ndarray
    norm: float
    scale: float

    @property
    def relative(self) -> float:
        return self.norm / self.scale if self.scale > 0 else self.norm


@dataclass
class ContinuationState:
    lambdas: list = field(default_factory=list)
    solutions: list = field(default_factory=list)   # shifted SolutionFields per lambda
    gradient_norms: list = field(default_factory=list)
    step_log: list = field(default_factory=list)    # (lambda, step, accepted, iterations)
    wref: ReferenceFlow | None = None


class DiscreteProblem:
    """Constant operators, loads and masks for one (space, data, wref)."""

    def __init__(self, space: FESpace, data: ProblemData, wref: ReferenceFlow, config: SolverConfig):
        self.space = space
        self.data = data
        self.wref = wref
        self.config = config
        self.k_unit = assembly.assemble_stiffness(space)
        self.b_mat = assembly.assemble_divergence(space)
        self.ks = self.k_unit.to_scipy() * data.eta
        self.bs = self.b_mat.to_scipy()
        w = wref.w_star
        # Frozen coupling int (uhat . grad W*) . phi; stays in convective form.
        self.d_mat = assembly.assemble_transport_derivative(space, w, assembly.CONVECTIVE).to_scipy()
        conv_ww = assembly.assemble_convection(space, w, assembly.CONVECTIVE).to_scipy() @ w
        self.rhs_v = (assembly.assemble_body_force(space, data.f)
                      + assembly.assemble_outlet_traction(space, data.sigma_star)
                      - self.ks @ w - conv_ww)
        self.rhs_p = -(self.bs @ w)
        self.free = space.free_vdofs
        self.scale = float(np.linalg.norm(self.rhs_v[self.free]) + np.linalg.norm(self.rhs_p))

    # -- nonlinear residual ------------------------------------------------------

    def ddn_matrix(self, u_total) -> sp.spmatrix | None:
        if self.config.outlet_condition != DDN:
            return None
        mat, _ = assembly.assemble_ddn_boundary(self.space, u_total, self.wref.w_star)
        return mat.to_scipy()

    def residual(self, uhat, pressure, lam: float = 1.0) -> NonlinearResidual:
        u = uhat + self.wref.w_star
        c = assembly.assemble_convection(self.space, u, self.config.convection_form).to_scipy()
        r_full = self.ks @ uhat + lam * (c @ uhat + self.d_mat @ uhat) - self.bs.T @ pressure - lam * self.rhs_v
        md = self.ddn_matrix(u)
        if md is not None:
            r_full += lam * (md @ uhat)
        r_mom = r_full[self.free]
        r_con = self.bs @ uhat - lam * self.rhs_p
        norm = float(np.sqrt(np.linalg.norm(r_mom) ** 2 + np.linalg.norm(r_con) ** 2))
        return NonlinearResidual(r_mom, r_con, norm, max(lam * self.scale, 1e-300))

    def converged(self, res: NonlinearResidual) -> bool:
        return res.norm <= self.config.tol_abs or res.relative <= self.config.tol_rel

    # -- linear solves -------------------------------------------------------------

    def _solve_saddle(self, a_op: sp.spmatrix, rhs_v, rhs_p):
        a_ff = a_op.tocsr()[self.free][:, self.free]
        b_pf = self.bs[:, self.free]
        mat = sp.bmat([[a_ff, -b_pf.T], [b_pf, None]], format="csr")
        rhs = np.concatenate([rhs_v, rhs_p])
        x = linalg.solve_sparse(linalg.SparseMatrix.from_scipy(mat), rhs)
        du = np.zeros(self.space.n_vdofs)
        du[self.free] = x[:len(self.free)]
        return du, x[len(self.free):]

    def picard_step(self, uhat, pressure, lam: float = 1.0):
        """Linear solve with transport and outflow weight frozen at the iterate."""
        u = uhat + self.wref.w_star
        c = assembly.assemble_convection(self.space, u, self.config.convection_form).to_scipy()
        a_op = self.ks + lam * (c + self.d_mat)
        md = self.ddn_matrix(u)
        if md is not None:
            a_op = a_op + lam * md
        return self._solve_saddle(a_op, lam * self.rhs_v[self.free], lam * self.rhs_p)

    def jacobian(self, uhat, lam: float = 1.0) -> sp.spmatrix:
        u = uhat + self.wref.w_star
        form = self.config.convection_form
        c = assembly.assemble_convection(self.space, u, form).to_scipy()
        g = assembly.assemble_transport_derivative(self.space, uhat, form).to_scipy()
        j = self.ks + lam * (c + g + self.d_mat)
        if self.config.outlet_condition == DDN:
            md = self.ddn_matrix(u)
            s = assembly.assemble_ddn_semismooth(self.space, u, uhat).to_scipy()
            j = j + lam * (md + s)
        return j

    def newton_step(self, uhat, pressure, lam: float = 1.0, max_backtracks: int = 8):
        """Damped semismooth Newton update on the full residual."""
        res = self.residual(uhat, pressure, lam)
        j = self.jacobian(uhat, lam)
        du, dp = self._solve_saddle(j, -res.momentum, -res.continuity)
        step = 1.0
        for _ in range(max_backtracks + 1):
            cand_u = uhat + step * du
            cand_p = pressure + step * dp
            cand_res = self.residual(cand_u, cand_p, lam)
            if cand_res.norm < res.norm or cand_res.norm <= self.config.tol_abs:
                return cand_u, cand_p, cand_res
            step *= 0.5
        raise LineSearchFailure(f"no residual decrease from {res.norm:.3e}")


def stokes_solve(space: FESpace, data: ProblemData) -> SolutionFields:
    """Linear Stokes solve with the natural traction outlet condition.

    The outlet condition pins the pressure level, so no gauge is applied.
    """
    k = assembly.assemble_stiffness(space)
    b = assembly.assemble_divergence(space)
    rhs_v = assembly.assemble_body_force(space, data.f) + assembly.assemble_outlet_traction(space, data.sigma_star)
    system = assembly.MixedSystem(k.to_scipy() * data.eta, b.to_scipy(), rhs_v, np.zeros(space.n_pdofs))
    reduced = assembly.apply_dirichlet(system, space, data.g_star)
    u, p = reduced.solve()
    fields = SolutionFields(u, p)
    fields.metadata["kind"] = "stokes"
    return fields


def _iterate(problem: DiscreteProblem, uhat, pressure, lam: float, mode: str, max_iter: int,
             history: list):
    cfg = problem.config
    res = problem.residual(uhat, pressure, lam)
    if not history:
        history.append(res.norm)
    bad_streak = 0
    for _ in range(max_iter):
        if problem.converged(res):
            return uhat, pressure, True
        if mode == PICARD:
            uhat, pressure = problem.picard_step(uhat, pressure, lam)
            res = problem.residual(uhat, pressure, lam)
        else:
            uhat, pressure, res = problem.newton_step(uhat, pressure, lam)
        history.append(res.norm)
        if res.norm > history[-2]:
            bad_streak += 1
            if bad_streak >= cfg.divergence_streak:
                raise Diverged(history)
        else:
            bad_streak = 0
    return uhat, pressure, problem.converged(res)


def _run_nonlinear(problem: DiscreteProblem, uhat, pressure, lam: float = 1.0):
    cfg = problem.config
    history: list = []
    if cfg.linearization in (PICARD, NEWTON):
        uhat, pressure, ok = _iterate(problem, uhat, pressure, lam, cfg.linearization,
                                      cfg.max_iter, history)
    else:
        switch = max(cfg.picard_switch_tol * problem.scale * lam, cfg.tol_abs)
        res = problem.residual(uhat, pressure, lam)
        history.append(res.norm)
        it = 0
        while res.norm > switch and it < cfg.picard_iters:
            uhat, pressure = problem.picard_step(uhat, pressure, lam)
            res = problem.residual(uhat, pressure, lam)
            history.append(res.norm)
            it += 1
        uhat, pressure, ok = _iterate(problem, uhat, pressure, lam, NEWTON, cfg.max_iter, history)
    if not ok:
        raise Diverged(history, f"residual {history[-1]:.3e} after {len(history) - 1} steps")
    return uhat, pressure, history


def solve(space: FESpace, data: ProblemData, config: SolverConfig | None = None,
          wref: ReferenceFlow | None = None) -> tuple[SolutionFields, ReferenceFlow]:
    """Solve the nonlinear outflow problem; returns fields and reference flow.

    The returned pressure is the native mixed-formulation pressure: the
    outlet condition fixes its level and no additive constant is applied.
    """
    config = config or SolverConfig()
    if wref is None:
        wref = build_reference_flow(space, data)
    problem = DiscreteProblem(space, data, wref, config)
    uhat = np.zeros(space.n_vdofs)
    pressure = np.zeros(space.n_pdofs)
    uhat, pressure, history = _run_nonlinear(problem, uhat, pressure)
    fields = SolutionFields(uhat + wref.w_star, pressure, residual_norms=history)
    fields.metadata.update(iterations=len(history) - 1, linearization=config.linearization,
                           outlet=config.outlet_condition, form=config.convection_form)
    return fields, wref


def picard_step(space: FESpace, data: ProblemData, wref: ReferenceFlow, fields: SolutionFields,
                config: SolverConfig | None = None) -> SolutionFields:
    """One frozen-transport update from the given state (total variables)."""
    config = config or SolverConfig(linearization=PICARD)
    problem = DiscreteProblem(space, data, wref, config)
    uhat = fields.velocity - wref.w_star
    uh, p = problem.picard_step(uhat, fields.pressure)
    res = problem.residual(uh, p)
    out = SolutionFields(uh + wref.w_star, p, residual_norms=[res.norm])
    out.metadata["relative_residual"] = res.relative
    return out


def newton_step(space: FESpace, data: ProblemData, wref: ReferenceFlow, fields: SolutionFields,
                config: SolverConfig | None = None) -> SolutionFields:
    """One damped Newton update from the given state (total variables)."""
    config = config or SolverConfig(linearization=NEWTON)
    problem = DiscreteProblem(space, data, wref, config)
    uhat = fields.velocity - wref.w_star
    uh, p, res = problem.newton_step(uhat, fields.pressure)
    out = SolutionFields(uh + wref.w_star, p, residual_norms=[res.norm])
    out.metadata["relative_residual"] = res.relative
    return out


def continuation_solve(space: FESpace, data: ProblemData, config: SolverConfig | None = None,
                       wref: ReferenceFlow | None = None) -> ContinuationState:
    """March the data-weighting parameter from 0 to 1 with adaptive steps.

    The zero-parameter member is homogeneous Stokes in the shifted variable,
    so the march starts from the exact zero solution; steps halve on
    nonlinear failure, grow on success, and clamp to land exactly on 1.
    """
    config = config or SolverConfig()
    if wref is None:
        wref = build_reference_flow(space, data)
    problem = DiscreteProblem(space, data, wref, config)
    state = ContinuationState(wref=wref)

    uhat = np.zeros(space.n_vdofs)
    pressure = np.zeros(space.n_pdofs)
    fields0 = SolutionFields(uhat.copy(), pressure.copy())
    fields0.metadata.update({"lambda": 0.0, "shifted": True, "iterations": 0})
    state.lambdas.append(0.0)
    state.solutions.append(fields0)
    state.gradient_norms.append(0.0)
    state.step_log.append((0.0, 0.0, True, 0))

    lam = 0.0
    step = config.lambda_initial_step
    while lam < 1.0:
        lam_try = min(1.0, lam + step)
        try:
            cand_u, cand_p, history = _run_nonlinear(problem, uhat.copy(), pressure.copy(), lam_try)
        except (Diverged, LineSearchFailure):
            state.step_log.append((lam_try, step, False, -1))
            step *= 0.5
            if step < config.lambda_min_step:
                raise ContinuationStalled(lam, step)
            continue
        uhat, pressure, lam = cand_u, cand_p, lam_try
        fields = SolutionFields(uhat.copy(), pressure.copy(), residual_norms=history)
        fields.metadata.update({"lambda": lam, "shifted": True, "iterations": len(history) - 1})
        state.lambdas.append(lam)
        state.solutions.append(fields)
        state.gradient_norms.append(assembly.h1_seminorm(space, uhat))
        state.step_log.append((lam, step, True, len(history) - 1))
        step = min(step * config.lambda_growth, 1.0)
    return state


@dataclass
class UniquenessReport:
    n_starts: int
    converged: list
    iterations: list
    max_pairwise_h1: float
    data_magnitude: float
    solutions: list


def uniqueness_probe(space: FESpace, data: ProblemData, n_starts: int, seed: int,
                     config: SolverConfig | None = None, start_scale: float = 0.1) -> UniquenessReport:
    """Solve from randomized initial iterates and compare the limits.

    Initial iterates add scaled random fields to the reference flow;
    per-start divergence is recorded, not fatal.  The data magnitude is
    the smallness surrogate (force norm plus trace surrogates) entering
    the small-data uniqueness condition.
    """
    if n_starts < 2:
        raise ValueError("need at least two starts")
    config = config or SolverConfig()
    wref = build_reference_flow(space, data)
    problem = DiscreteProblem(space, data, wref, config)
    rng = np.random.default_rng(seed)
    ref_mag = max(assembly.h1_seminorm(space, wref.w_star), 1.0)

    converged, iterations, sols = [], [], []
    for _ in range(n_starts):
        uhat = np.zeros(space.n_vdofs)
        uhat[space.free_vdofs] = start_scale * ref_mag * rng.standard_normal(len(space.free_vdofs))
        pressure = np.zeros(space.n_pdofs)
        try:
            uh, p, history = _run_nonlinear(problem, uhat, pressure)
            converged.append(True)
            iterations.append(len(history) - 1)
            sols.append(SolutionFields(uh + wref.w_star, p, residual_norms=history))
        except (Diverged, LineSearchFailure):
            converged.append(False)
            iterations.append(-1)
            sols.append(None)

    max_dist = 0.0
    ok = [s for s in sols if s is not None]
    for i in range(len(ok)):
        for j in range(i + 1, len(ok)):
            max_dist = max(max_dist, assembly.h1_seminorm(space, ok[i].velocity - ok[j].velocity))

    magnitude = _force_l2(space, data) + wref.report.g_surrogate + _sigma_l2_outlet(space, data)
    return UniquenessReport(n_starts, converged, iterations, max_dist, magnitude, sols)


def _force_l2(space: FESpace, data: ProblemData) -> float:
    pts = space.quad_points.reshape(-1, 2)
    f = data.f_values(pts).reshape(space.quad_points.shape)
    return float(np.sqrt(np.einsum("tq,tqc,tqc->", space.wdet, f, f, optimize=True)))


def _sigma_l2_outlet(space: FESpace, data: ProblemData) -> float:
    edge_ids = space.boundary_edge_ids(OUTLET)
    if len(edge_ids) == 0:
        return 0.0
    pts = assembly.edge_quad_points(space, edge_ids)
    sig = data.sigma_values(pts.reshape(-1, 2)).reshape(pts.shape[:2])
    return float(np.sqrt(assembly.boundary_scalar_integral(space, sig * sig, OUTLET)))
