"""Acceptance criteria A1-A12, one test per criterion.

Each test asserts the stated tolerance and prints a one-line verdict
(run with ``pytest -s`` to see the lines as they pass).
"""

import sys
import time
from pathlib import Path

import numpy as np
import pytest
import scipy.linalg as dla

from pipeflow import cli, diagnostics, geometry, io, reference_flow as rf, solver
from pipeflow.fem import FESpace, ProblemData, assembly
from pipeflow.fem.assembly import negative_part
from pipeflow.geometry import INLET, OUTLET

CASES = Path(__file__).resolve().parent.parent / "cases"


def _report(tag: str, detail: str):
    print(f"[{tag}] PASS: {detail}")


def _run_cli(case_name: str, tmp_path, command, extra=()):
    """Run a canonical case through the CLI with outputs into tmp_path."""
    text = (CASES / case_name).read_text()
    outdir = tmp_path / case_name.replace(".case", "")
    lines = [f"directory = {outdir}" if ln.startswith("directory =") else ln
             for ln in text.splitlines()]
    case_path = tmp_path / case_name
    case_path.write_text("\n".join(lines) + "\n")
    rc = cli.main([command, str(case_path), *extra])
    return rc, outdir


@pytest.fixture(scope="session")
def continuation_outputs(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("a5")
    return _run_cli("sbend.case", tmp, "continuation")


@pytest.fixture(scope="session")
def compare_outputs(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("a7")
    return _run_cli("backflow.case", tmp, "compare-outlet")


@pytest.fixture(scope="module")
def poiseuille_setup():
    spec = geometry.channel_spec(0.25, 0.75, 1.0)
    mesh = geometry.generate_mesh(spec, 0.07)
    space = FESpace(mesh, spec)
    flow = rf.poiseuille_2d(2, 1.0, 1.0, 0.75, 1.0, spec.outlet.transform)
    data = ProblemData(1.0, g_star=flow.velocity, sigma_star=0.0)
    return spec, space, flow, data


@pytest.fixture(scope="module")
def sbend_setup():
    spec = geometry.channel_spec(0.5, 0.9, 0.3, 0.3, middle_length=1.0, offset=0.6)
    mesh = geometry.generate_mesh(spec, 0.08)
    space = FESpace(mesh, spec)
    flow = rf.poiseuille_2d(1, 0.5, 0.3, 0.5, 0.05, spec.inlet.transform)
    data = ProblemData(0.05, g_star=flow.velocity, sigma_star=0.0)
    wref = rf.build_reference_flow(space, data)
    return spec, space, data, wref


def test_a1_poiseuille_exactness(poiseuille_setup):
    spec, space, flow, data = poiseuille_setup
    assert 700 <= space.mesh.n_triangles <= 1500
    t0 = time.perf_counter()
    fields, _ = solver.solve(space, data)
    elapsed = time.perf_counter() - t0

    class Exact:
        velocity = staticmethod(flow.velocity)
        velocity_grad = staticmethod(flow.velocity_grad)
        pressure = staticmethod(flow.pressure)

    _, h1v, l2p = assembly.error_norms(space, fields, Exact)
    assert h1v <= 1e-8
    assert l2p <= 1e-8
    assert elapsed < 10.0
    _report("A1", f"H1 vel {h1v:.2e}, L2 pres {l2p:.2e} on {space.mesh.n_triangles} triangles "
                  f"in {elapsed:.2f}s")


def test_a2_manufactured_convergence(tmp_path):
    t0 = time.perf_counter()
    rc, outdir = _run_cli("manufactured.case", tmp_path, "converge", ("--levels", "3"))
    elapsed = time.perf_counter() - t0
    assert rc == 0
    header, rows = io.read_csv(outdir / "convergence.csv")
    idx = {name: k for k, name in enumerate(header)}
    vel_rate = float(rows[2][idx["rate_L2_vel"]])
    pres_rate = float(rows[2][idx["rate_L2_pres"]])
    assert vel_rate >= 2.7
    assert pres_rate >= 1.7
    assert elapsed < 120.0
    _report("A2", f"L2 velocity rate {vel_rate:.2f}, pressure rate {pres_rate:.2f} "
                  f"in {elapsed:.1f}s")


def test_a3_rest_state(poiseuille_setup):
    _, space, _, _ = poiseuille_setup
    fields, _ = solver.solve(space, ProblemData(1.0))
    g = assembly.h1_seminorm(space, fields.velocity)
    assert g <= 1e-12
    _report("A3", f"zero data gives |grad u| = {g:.2e}")


def test_a4_energy_identity(poiseuille_setup, sbend_setup):
    for name, (space, data, wref) in {
        "straight": (poiseuille_setup[1], poiseuille_setup[3], None),
        "s-bend": (sbend_setup[1], sbend_setup[2], sbend_setup[3]),
    }.items():
        fields, wref = solver.solve(space, data, wref=wref)
        rep = diagnostics.energy_report(space, data, wref, fields)
        assert rep.identity_residual <= 1e-10, name
        assert rep.ddn_dissipation >= 0.0, name
    z = np.random.default_rng(0).uniform(-10, 10, 10_000)
    nz = negative_part(z)
    assert np.all(z + nz >= 0.0)
    assert np.all(2 * z * z + nz * z >= 0.0)
    _report("A4", f"identity residual {rep.identity_residual:.2e}; kernel signs hold on 1e4 samples")


def test_a5_continuation(continuation_outputs, sbend_setup):
    rc, outdir = continuation_outputs
    assert rc == 0
    header, rows = io.read_csv(outdir / "continuation.csv")
    idx = {name: k for k, name in enumerate(header)}
    lambdas = [float(r[idx["lambda"]]) for r in rows]
    assert lambdas[0] == 0.0 and lambdas[-1] == 1.0
    assert float(rows[0][idx["J"]]) == 0.0

    _, space, data, wref = sbend_setup
    state = solver.continuation_solve(space, data, wref=wref)
    direct, _ = solver.solve(space, data, solver.SolverConfig(linearization=solver.NEWTON), wref=wref)
    dist = assembly.h1_seminorm(space, state.solutions[-1].velocity - (direct.velocity - wref.w_star))
    assert dist <= 1e-8
    _report("A5", f"lambda sweep {lambdas} reached 1; |final - direct|_H1 = {dist:.2e}")


def test_a6_uniqueness_probe(tmp_path):
    rc, outdir = _run_cli("smalldata.case", tmp_path, "uniqueness", ("--starts", "5", "--seed", "0"))
    assert rc == 0
    header, rows = io.read_csv(outdir / "uniqueness_summary.csv")
    idx = {name: k for k, name in enumerate(header)}
    assert int(rows[0][idx["n_converged"]]) == 5
    max_dist = float(rows[0][idx["max_pairwise_h1"]])
    assert max_dist <= 1e-8
    _report("A6", f"5 seeded starts converged; max pairwise H1 distance {max_dist:.2e}")


def test_a7_outlet_comparison(compare_outputs):
    rc, outdir = compare_outputs
    assert rc == 0
    header, rows = io.read_csv(outdir / "outlet_compare.csv")
    idx = {name: k for k, name in enumerate(header)}
    table = {r[idx["condition"]]: r for r in rows}
    ddn, dn = table["ddn"], table["do_nothing"]
    assert ddn[idx["converged"]] == "true"
    assert float(ddn[idx["final_rel_residual"]]) <= 1e-10
    backflow = float(ddn[idx["backflow_energy"]])
    assert backflow > 0.0
    assert dn[idx["converged"]] == "false"
    dn_min = float(dn[idx["min_rel_residual_100"]])
    assert dn_min > 1e-6
    _report("A7", f"directional converged (backflow energy {backflow:.2e}); plain traction "
                  f"stuck at {dn_min:.2e} over 100 iterations")


def test_a8_torsion_profiles():
    tor = rf.torsion_solve(geometry.disk_mesh(24))
    rho_err = abs(tor.rho - np.pi / 8)
    assert rho_err <= 2e-3
    # refinement brings it closer
    tor_fine = rf.torsion_solve(geometry.disk_mesh(36))
    assert abs(tor_fine.rho - np.pi / 8) < rho_err

    import scipy.sparse as sp
    import scipy.sparse.linalg as spla
    n = 201
    hgrid = 2.0 / (n + 1)
    main = 4.0 * np.ones(n * n)
    side = -np.ones(n * n - 1)
    side[np.arange(1, n * n) % n == 0] = 0.0
    up = -np.ones(n * n - n)
    a = sp.diags([main, side, side, up, up], [0, 1, -1, n, -n], format="csc") / hgrid**2
    center_fd = spla.spsolve(a, np.ones(n * n)).reshape(n, n)[n // 2, n // 2]
    tor_sq = rf.torsion_solve(geometry.square_mesh(40))
    sq_err = abs(tor_sq.eval([[0.0, 0.0]])[0] - center_fd)
    assert sq_err <= 1e-3

    prof = rf.poiseuille_3d_profile(tor_fine, 1.0, 1.0)
    center_speed = prof.speed([[0.0, 0.0]])[0]
    assert abs(center_speed - 2.0 / np.pi) <= 5e-3
    _report("A8", f"disk integral err {rho_err:.1e}, square center err {sq_err:.1e}, "
                  f"centerline speed {center_speed:.5f} vs {2 / np.pi:.5f}")


def test_a9_reference_flow(sbend_setup):
    spec, space, data, wref = sbend_setup
    out_nodes = space.boundary_nodes(OUTLET)
    v2 = space.interpolate_velocity(wref.outlet_flow.velocity)
    trace_err = max(np.abs(wref.w_star[2 * out_nodes] - v2[2 * out_nodes]).max(),
                    np.abs(wref.w_star[2 * out_nodes + 1] - v2[2 * out_nodes + 1]).max())
    assert trace_err <= 1e-10
    assert wref.report.div_residual <= 1e-10
    assert wref.report.compat_residual <= 1e-10
    eids = space.boundary_edge_ids(OUTLET)
    grad = assembly.boundary_velocity_gradient(space, wref.w_star, eids)
    nu = spec.nu_star
    gnn = np.abs(np.einsum("eqcd,c,d->eq", grad, nu, nu)).max()
    assert gnn <= 1e-8
    _report("A9", f"outlet trace err {trace_err:.1e}, div residual {wref.report.div_residual:.1e}, "
                  f"normal-normal derivative {gnn:.1e}, compat {wref.report.compat_residual:.1e}")


def test_a10_jacobian_correctness(sbend_setup):
    _, space, data, wref = sbend_setup
    prob = solver.DiscreteProblem(space, data, wref, solver.SolverConfig())
    rng = np.random.default_rng(17)
    free = space.free_vdofs
    worst = 0.0
    for _ in range(5):
        uhat = np.zeros(space.n_vdofs)
        uhat[free] = 0.1 * rng.standard_normal(len(free))
        p = 0.1 * rng.standard_normal(space.n_pdofs)
        un = assembly.boundary_normal_trace(space, uhat + wref.w_star,
                                            space.boundary_edge_ids(OUTLET))
        assert np.abs(un).min() > 1e-4  # stay away from the kernel kink
        jff = prob.jacobian(uhat).tocsr()[free][:, free]
        h = 1e-6
        for col in rng.choice(len(free), 6, replace=False):
            e = np.zeros(space.n_vdofs)
            e[free[col]] = 1.0
            fd = (prob.residual(uhat + h * e, p).momentum
                  - prob.residual(uhat - h * e, p).momentum) / (2 * h)
            jc = np.asarray(jff[:, col].todense()).ravel()
            worst = max(worst, np.linalg.norm(fd - jc) / max(np.linalg.norm(jc), 1e-12))
    assert worst <= 1e-6
    _report("A10", f"5 random states, worst relative column error {worst:.2e}")


def _constants_builder(space, eta):
    kmat = assembly.assemble_stiffness(space)
    bmat = assembly.assemble_divergence(space)
    ksc = assembly.assemble_scalar_stiffness(space)

    def build(g):
        return rf.build_reference_flow(space, ProblemData(eta, g_star=g),
                                       k_mat=kmat, b_mat=bmat, k_scalar=ksc)

    return build


def test_a11_constants():
    spec = geometry.channel_spec(0.5, 0.5, 0.5)
    infsups = []
    for h in (0.25, 0.125, 0.0625):
        space = FESpace(geometry.generate_mesh(spec, h), spec)
        infsups.append(diagnostics.estimate_infsup_constant(space))
    spread = (max(infsups) - min(infsups)) / infsups[-1]
    assert spread < 0.05  # LBB stability under refinement

    coarse = FESpace(geometry.generate_mesh(spec, 0.25), spec)
    trace_c = diagnostics.estimate_trace_constant(coarse)
    free = coarse.free_vdofs
    k = assembly.assemble_stiffness(coarse).to_scipy()[free][:, free].toarray()
    eids = coarse.boundary_edge_ids(OUTLET)
    ones = np.ones((len(eids), len(coarse.edge_w)))
    m = assembly.boundary_weighted_mass(coarse, eids, ones).to_scipy()[free][:, free].toarray()
    oracle = dla.eigh(m, k, eigvals_only=True)[-1]
    assert abs(trace_c - oracle) <= 1e-8

    c1 = diagnostics.estimate_constants(coarse, _constants_builder(coarse, 1.0), 1.0,
                                        n_samples=4, seed=0, restarts=8)
    c2 = diagnostics.estimate_constants(coarse, _constants_builder(coarse, 3.0), 3.0,
                                        n_samples=4, seed=0, restarts=8)
    assert c1.omega_star > 0
    assert c2.omega_star == pytest.approx(3.0 * c1.omega_star, rel=1e-9)
    _report("A11", f"inf-sup spread {100 * spread:.2f}%, trace err {abs(trace_c - oracle):.1e}, "
                   f"omega* {c1.omega_star:.4f} (linear in viscosity)")


def test_a12_taylor_couette():
    report = rf.taylor_couette_check(n=1000, seed=5)
    assert report.max_laplacian <= 1e-12
    assert report.max_divergence <= 1e-12
    assert report.max_inner_boundary <= 1e-12
    _report("A12", f"laplacian {report.max_laplacian:.1e}, divergence {report.max_divergence:.1e}, "
                   f"inner trace {report.max_inner_boundary:.1e}")


FRONTEND = Path(__file__).resolve().parent.parent / "frontend"


@pytest.mark.skipif(not (FRONTEND / "dist" / "cli.js").exists(),
                    reason="secondary component not built (npm run build in frontend/)")
def test_a13_postproc(tmp_path, continuation_outputs, compare_outputs):
    import subprocess

    def postproc(*args):
        return subprocess.run(["node", str(FRONTEND / "dist" / "cli.js"), *args],
                              capture_output=True, text=True)

    # exact geometric sequence: fitted slope 3 within 1e-6
    conv = tmp_path / "geo.csv"
    io.write_csv(conv, ["level", "h", "L2_vel", "H1_vel", "L2_pres"],
                 [[0, 0.1, 1e-2, 1e-2, 1e-2],
                  [1, 0.05, 1.25e-3, 1.25e-3, 1.25e-3],
                  [2, 0.025, 1.5625e-4, 1.5625e-4, 1.5625e-4]])
    result = postproc("convergence", str(conv), "-o", str(tmp_path / "conv.svg"))
    assert result.returncode == 0, result.stderr
    sidecar = (tmp_path / "conv.svg.txt").read_text()
    slope = float(sidecar.splitlines()[0].split("=")[1].split("(")[0])
    assert abs(slope - 3.0) <= 1e-6
    # independent recomputation from the CSV
    h = np.log([0.1, 0.05, 0.025])
    e = np.log([1e-2, 1.25e-3, 1.5625e-4])
    fit = np.polyfit(h, e, 1)[0]
    assert abs(slope - fit) <= 1e-12

    # lambda-sweep and outlet-comparison figures from the A5/A7 outputs
    _, a5dir = continuation_outputs
    result = postproc("lambda-sweep", str(a5dir / "continuation.csv"), "-o", str(tmp_path / "sweep.svg"))
    assert result.returncode == 0, result.stderr
    header, rows = io.read_csv(a5dir / "continuation.csv")
    jmax = max(float(r[header.index("J")]) for r in rows)
    side = (tmp_path / "sweep.svg.txt").read_text()
    annotated = float(side.splitlines()[0].split("=")[1].split("at")[0])
    assert annotated == pytest.approx(jmax, rel=1e-15)

    _, a7dir = compare_outputs
    result = postproc("outlet-compare", str(a7dir / "outlet_compare.csv"), "-o", str(tmp_path / "cmp.svg"))
    assert result.returncode == 0, result.stderr
    assert (tmp_path / "cmp.svg").stat().st_size > 500
    _report("A13", f"slope {slope:.8f}; sweep and comparison figures rendered")
